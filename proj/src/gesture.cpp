#include "vip/gesture.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vip {

std::optional<Point2> to_model(const DisplayObjectTrack& dobj, Point2 image_pos) {
  if (!dobj.has_pose()) return std::nullopt;
  Point2 m{};
  try {
    m = inverse_warp(*dobj.homography(), image_pos);
  } catch (const AtInfinityError&) {
    return std::nullopt;
  }
  if (!(m.x >= 0.0 && m.x <= 1.0 && m.y >= 0.0 && m.y <= 1.0)) return std::nullopt;
  return m;
}

std::optional<TouchEvent> fuse(const TapEvent& tap, std::span<const MarkerSample> samples,
                               const DisplayObjectTrack& dobj) {
  if (samples.empty()) return std::nullopt;
  const auto after = std::lower_bound(samples.begin(), samples.end(), tap.t,
                                      [](const MarkerSample& s, TimeMs t) { return s.t < t; });
  auto nearest = after;
  if (after == samples.end() || (after != samples.begin() && tap.t - (after - 1)->t <= after->t - tap.t)) {
    nearest = after - 1;
  }
  if (std::abs(nearest->t - tap.t) > kAssociationWindowMs || !nearest->pos) return std::nullopt;
  return TouchEvent{tap.t, *nearest->pos, to_model(dobj, *nearest->pos)};
}

TimeMs time_of(const FsmInput& in) {
  return std::visit([](const auto& v) -> TimeMs { return v.t; }, in);
}

std::vector<GestureEvent> GestureEngine::step(const FsmInput& in, const SessionState& design,
                                              const DisplayObjectTrack& dobj) {
  const TimeMs t = time_of(in);
  if (state_.last_t && t < *state_.last_t) {
    throw OutOfOrderError("gesture input at t=" + std::to_string(t) + " is older than t=" +
                          std::to_string(*state_.last_t));
  }
  state_.last_t = t;
  state_.mode = design.mode;
  state_.selection = design.selection;

  std::vector<GestureEvent> out;
  if (const auto* touch = std::get_if<TouchEvent>(&in)) {
    on_touch(*touch, design, out);
  } else if (const auto* move = std::get_if<MoveEvent>(&in)) {
    on_move(*move, design, dobj, out);
  } else {
    on_tick(t, design, out);
  }
  return out;
}

void GestureEngine::begin_touch(const TouchEvent& touch, Target touched, Phase phase) {
  state_.phase = phase;
  state_.touch_anchor = TouchAnchor{touch.t, touch.image_pos, touch.model_pos};
  state_.touched = std::move(touched);
  state_.last_image = touch.image_pos;
  state_.last_model = touch.model_pos;
  state_.last_motion_t = touch.t;
  state_.recent_positions.clear();
  if (touch.model_pos) state_.recent_positions.push_back({touch.t, *touch.model_pos});
}

void GestureEngine::release() {
  state_.phase = Phase::Idle;
  state_.touch_anchor.reset();
  state_.touched = std::monostate{};
  state_.last_model.reset();
  state_.recent_positions.clear();
}

void GestureEngine::on_touch(const TouchEvent& touch, const SessionState& design, std::vector<GestureEvent>& out) {
  // A new onset always ends whatever touch was in progress.
  release();

  if (!touch.model_pos) {
    if (state_.mode != Mode::Edit) return;
    const auto slot = cfg_.palette_region.slot_at(touch.image_pos, design.palette.slots.size());
    if (!slot) return;
    const SlotId id = design.palette.slots[*slot].id;
    out.push_back({GestureKind::Select, touch.t, id, std::monostate{}});
    state_.selection = id;
    return;
  }

  const Point2 pos = *touch.model_pos;
  const Element* el = design.element_at(pos);

  if (state_.mode == Mode::Run) {
    if (el) out.push_back({GestureKind::Click, touch.t, el->id, pos});
    begin_touch(touch, el ? Target{el->id} : Target{}, Phase::Touching);
    return;
  }

  if (el) {
    const bool selected = state_.selection == Target{el->id};
    if (selected && !el->locked && el->rect.in_border_band(pos, cfg_.resize_band)) {
      begin_touch(touch, el->id, Phase::Resizing);
      return;
    }
    if (!selected) {
      out.push_back({GestureKind::Select, touch.t, el->id, std::monostate{}});
      state_.selection = el->id;
    }
    begin_touch(touch, el->id, Phase::Touching);
    return;
  }

  if (const auto* slot = std::get_if<SlotId>(&state_.selection)) {
    out.push_back({GestureKind::Place, touch.t, *slot, pos});
    state_.selection = std::monostate{};
    return;
  }
  out.push_back({GestureKind::Select, touch.t, std::monostate{}, std::monostate{}});
  state_.selection = std::monostate{};
  begin_touch(touch, std::monostate{}, Phase::Touching);
}

void GestureEngine::on_move(const MoveEvent& move, const SessionState& design, const DisplayObjectTrack& dobj,
                            std::vector<GestureEvent>& out) {
  const Point2 image = move.centre;
  const std::optional<Point2> model = to_model(dobj, image);

  if (state_.phase == Phase::Idle) {
    if (state_.last_scan_t && move.t - *state_.last_scan_t < cfg_.scan_interval_ms) return;
    Target hover{};
    if (model) {
      if (const Element* el = design.element_at(*model)) hover = el->id;
    } else if (const auto slot = cfg_.palette_region.slot_at(image, design.palette.slots.size())) {
      hover = design.palette.slots[*slot].id;
    }
    out.push_back({GestureKind::Scan, move.t, hover, model ? Payload{*model} : Payload{}});
    state_.last_scan_t = move.t;
    return;
  }

  if (distance(image, state_.last_image) < cfg_.motion_px) return;
  state_.last_motion_t = move.t;

  if (model) {
    state_.recent_positions.push_back({move.t, *model});
    while (!state_.recent_positions.empty() && move.t - state_.recent_positions.front().t > cfg_.wipe_window_ms) {
      state_.recent_positions.pop_front();
    }
    if (sweep_detected()) {
      out.push_back({GestureKind::Wipe, move.t, std::monostate{}, std::monostate{}});
      state_.mode = state_.mode == Mode::Edit ? Mode::Run : Mode::Edit;
      state_.selection = std::monostate{};
      release();
      return;
    }
  }

  const auto* id = std::get_if<ElementId>(&state_.touched);
  const Element* el = id ? design.find(*id) : nullptr;
  if (el && model && state_.last_model && state_.mode == Mode::Edit) {
    const Point2 prev = *state_.last_model;
    switch (state_.phase) {
      case Phase::Touching:
        if (el->locked) break;
        state_.phase = Phase::Dragging;
        [[fallthrough]];
      case Phase::Dragging:
        out.push_back({GestureKind::Drag, move.t, el->id, *model - prev});
        break;
      case Phase::Resizing: {
        const Point2 c = el->rect.centre();
        const double before = distance(prev, c);
        if (before > 1e-9) out.push_back({GestureKind::Resize, move.t, el->id, Scale{distance(*model, c) / before}});
        break;
      }
      case Phase::Idle:
        break;
    }
  }
  state_.last_image = image;
  if (model) state_.last_model = model;
}

void GestureEngine::on_tick(TimeMs t, const SessionState& design, std::vector<GestureEvent>& out) {
  if (state_.phase == Phase::Idle) return;
  const double quiet = t - state_.last_motion_t;

  if (state_.phase == Phase::Touching && state_.mode == Mode::Edit) {
    if (const auto* id = std::get_if<ElementId>(&state_.touched); id && design.find(*id)) {
      if (quiet >= cfg_.lock_ms) {
        out.push_back({GestureKind::Lock, t, *id, std::monostate{}});
        release();
      }
      return;
    }
  }
  if (quiet >= cfg_.release_ms) release();
}

bool GestureEngine::sweep_detected() const {
  const auto& pts = state_.recent_positions;
  if (pts.size() < 2) return false;
  // Longest suffix whose x keeps one direction.
  std::size_t start = pts.size() - 1;
  int dir = 0;
  for (std::size_t i = pts.size() - 1; i > 0; --i) {
    const double d = pts[i].p.x - pts[i - 1].p.x;
    if (d != 0.0) {
      const int s = d > 0.0 ? 1 : -1;
      if (dir == 0) dir = s;
      if (s != dir) break;
    }
    start = i - 1;
  }
  const double dx = std::abs(pts.back().p.x - pts[start].p.x);
  const double dy = std::abs(pts.back().p.y - pts[start].p.y);
  return dx >= cfg_.wipe_span && dy < dx;
}

}  // namespace vip
