#pragma once

#include <optional>
#include <vector>

#include "vip/edges.hpp"
#include "vip/geometry.hpp"
#include "vip/image.hpp"
#include "vip/vision.hpp"

namespace vip {

/// Session time in milliseconds.
using TimeMs = double;

/// Per-axis movement that counts as a real move.
inline constexpr double kMoveGatePx = 8.0;
inline constexpr int kMarkerLostLimit = 5;
inline constexpr int kDisplayHoldLimit = 15;

struct MoveEvent {
  int marker_id = 0;
  TimeMs t = 0.0;
  Point2 centre{};

  bool operator==(const MoveEvent&) const = default;
};

/// True when either axis moved at least kMoveGatePx.
inline bool gate_fires(Point2 reported, Point2 live) {
  return std::abs(live.x - reported.x) >= kMoveGatePx || std::abs(live.y - reported.y) >= kMoveGatePx;
}

/// One colour marker. `reported_centre` is the last centre emitted as a
/// move; `live_centre` follows every frame.
class MarkerTrack {
 public:
  MarkerTrack() = default;
  MarkerTrack(int marker_id, HsvThresholds thresholds) : marker_id_(marker_id), thresholds_(thresholds) {}

  int marker_id() const noexcept { return marker_id_; }
  const HsvThresholds& thresholds() const noexcept { return thresholds_; }
  const std::optional<Point2>& reported_centre() const noexcept { return reported_; }
  const std::optional<Point2>& live_centre() const noexcept { return live_; }
  const std::vector<Point2>& hull() const noexcept { return hull_; }
  int lost_frames() const noexcept { return lost_frames_; }

  /// Feeds one scrubbed mask for this marker.
  std::optional<MoveEvent> update(const BinaryMask& mask, TimeMs t);

  /// Same transition driven by an already computed centroid.
  std::optional<MoveEvent> update(std::optional<Point2> centre, std::vector<Point2> hull, TimeMs t);

 private:
  int marker_id_ = 0;
  HsvThresholds thresholds_{};
  std::optional<Point2> reported_;
  std::optional<Point2> live_;
  std::vector<Point2> hull_;
  int lost_frames_ = 0;
};

/// Pose of the hand-held display object. The homography is present exactly
/// when the quad is.
class DisplayObjectTrack {
 public:
  const std::optional<Quad>& quad() const noexcept { return quad_; }
  const std::optional<Homography>& homography() const noexcept { return homography_; }
  int stale_frames() const noexcept { return stale_frames_; }
  bool has_pose() const noexcept { return quad_.has_value(); }

  /// Returns true when the stored pose changed (replaced or cleared).
  bool update(const std::optional<Quad>& detection);

  /// Installs a pose directly, bypassing the gate.
  void set_pose(const Quad& q);

 private:
  std::optional<Quad> quad_;
  std::optional<Homography> homography_;
  int stale_frames_ = 0;
};

}  // namespace vip
