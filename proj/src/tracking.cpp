#include "vip/tracking.hpp"

#include <utility>

namespace vip {

std::optional<MoveEvent> MarkerTrack::update(const BinaryMask& mask, TimeMs t) {
  auto c = centroid(mask);
  return update(c, c ? mask_hull(mask) : std::vector<Point2>{}, t);
}

std::optional<MoveEvent> MarkerTrack::update(std::optional<Point2> centre, std::vector<Point2> hull, TimeMs t) {
  live_ = centre;
  hull_ = std::move(hull);
  if (!centre) {
    if (lost_frames_ < kMarkerLostLimit) ++lost_frames_;
    if (lost_frames_ >= kMarkerLostLimit) reported_.reset();
    return std::nullopt;
  }
  lost_frames_ = 0;
  if (!reported_ || gate_fires(*reported_, *centre)) {
    reported_ = centre;
    return MoveEvent{marker_id_, t, *centre};
  }
  return std::nullopt;
}

bool DisplayObjectTrack::update(const std::optional<Quad>& detection) {
  if (!detection) {
    if (!quad_) return false;
    if (stale_frames_ < kDisplayHoldLimit) ++stale_frames_;
    if (stale_frames_ >= kDisplayHoldLimit) {
      quad_.reset();
      homography_.reset();
      return true;
    }
    return false;
  }
  stale_frames_ = 0;
  bool moved = !quad_;
  for (std::size_t i = 0; !moved && i < 4; ++i) moved = gate_fires(quad_->corners[i], detection->corners[i]);
  if (!moved) return false;
  try {
    homography_ = homography_from_quad(*detection);
    quad_ = detection;
  } catch (const DegenerateQuadError&) {
    // Keep the previous pose; a degenerate detection is not a pose.
    return false;
  }
  return true;
}

void DisplayObjectTrack::set_pose(const Quad& q) {
  homography_ = homography_from_quad(q);
  quad_ = q;
  stale_frames_ = 0;
}

}  // namespace vip
