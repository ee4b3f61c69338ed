#pragma once

#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "vip/audio.hpp"
#include "vip/events.hpp"
#include "vip/model.hpp"
#include "vip/tracking.hpp"

namespace vip {

/// Live marker position at one frame; no position while the marker is lost.
struct MarkerSample {
  TimeMs t = 0.0;
  std::optional<Point2> pos;
};

/// A tap matched to a marker position. model_pos is present exactly when
/// the position lies on the display object.
struct TouchEvent {
  TimeMs t = 0.0;
  Point2 image_pos{};
  std::optional<Point2> model_pos;

  bool operator==(const TouchEvent&) const = default;
};

inline constexpr double kAssociationWindowMs = 100.0;

/// Inverse-warps into the unit square; nothing without a pose or outside it.
std::optional<Point2> to_model(const DisplayObjectTrack& dobj, Point2 image_pos);

/// Pairs a tap with the marker sample nearest in time. Nothing when that
/// sample is more than kAssociationWindowMs away or the marker was lost.
std::optional<TouchEvent> fuse(const TapEvent& tap, std::span<const MarkerSample> samples,
                               const DisplayObjectTrack& dobj);

struct Tick {
  TimeMs t = 0.0;
};

using FsmInput = std::variant<TouchEvent, MoveEvent, Tick>;

TimeMs time_of(const FsmInput& in);

struct FsmConfig {
  double release_ms = 300.0;
  double lock_ms = 800.0;
  double motion_px = 3.0;
  double wipe_span = 0.5;
  double wipe_window_ms = 500.0;
  double scan_interval_ms = 100.0;
  double resize_band = 0.15;
  PaletteRegion palette_region{};
};

enum class Phase { Idle, Touching, Dragging, Resizing };

struct TouchAnchor {
  TimeMs t = 0.0;
  Point2 image_pos{};
  std::optional<Point2> model_pos;
};

struct TimedPoint {
  TimeMs t = 0.0;
  Point2 p{};
};

struct FsmState {
  Mode mode = Mode::Edit;
  Selection selection{};
  Phase phase = Phase::Idle;
  std::optional<TouchAnchor> touch_anchor;
  /// Model positions seen while touching, newest last, within the wipe window.
  std::deque<TimedPoint> recent_positions;

  Target touched{};
  Point2 last_image{};
  std::optional<Point2> last_model;
  TimeMs last_motion_t = 0.0;
  std::optional<TimeMs> last_scan_t;
  std::optional<TimeMs> last_t;
};

class OutOfOrderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gesture state machine over touches, marker moves and frame ticks. The
/// session's design state is authoritative for mode and selection; the
/// engine mirrors it at the start of every step.
///
/// Transition table (Edit / Run are the session modes):
///   touch palette slot (Edit)            -> Select(slot)
///   touch empty surface, slot selected   -> Place(slot, position)
///   touch empty surface, otherwise (Edit)-> Select(none), phase Touching
///   touch element (Edit)                 -> Select(element) unless already
///                                           selected, phase Touching
///   touch border band of the selected,
///   unlocked element (Edit)              -> phase Resizing
///   touch element (Run)                  -> Click(element), phase Touching
///   move while Touching an element       -> Drag(element, delta), phase Dragging
///   move while Dragging                  -> Drag(element, delta)
///   move while Resizing                  -> Resize(element, distance ratio)
///   move while Idle                      -> Scan, at most every scan interval
///   monotone horizontal sweep >= wipe_span
///   within the wipe window while touching -> Wipe; mode flips
///   no motion for lock_ms while Touching
///   an element (Edit)                    -> Lock(element), phase Idle
///   no motion for release_ms otherwise   -> phase Idle (release)
class GestureEngine {
 public:
  explicit GestureEngine(FsmConfig cfg = {}) : cfg_(cfg) {}

  /// Throws OutOfOrderError when the input is older than the previous one.
  std::vector<GestureEvent> step(const FsmInput& in, const SessionState& design, const DisplayObjectTrack& dobj);

  const FsmState& state() const noexcept { return state_; }
  const FsmConfig& config() const noexcept { return cfg_; }

 private:
  void on_touch(const TouchEvent& touch, const SessionState& design, std::vector<GestureEvent>& out);
  void on_move(const MoveEvent& move, const SessionState& design, const DisplayObjectTrack& dobj,
               std::vector<GestureEvent>& out);
  void on_tick(TimeMs t, const SessionState& design, std::vector<GestureEvent>& out);

  void begin_touch(const TouchEvent& touch, Target touched, Phase phase);
  void release();
  bool sweep_detected() const;

  FsmConfig cfg_;
  FsmState state_;
};

}  // namespace vip
