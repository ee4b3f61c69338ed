#include "vip/events.hpp"

#include <array>
#include <stdexcept>

namespace vip {
namespace {

constexpr std::array<std::string_view, 8> kGestureNames = {"scan", "select", "place", "drag",
                                                           "resize", "wipe", "lock", "click"};

}  // namespace

std::string_view to_string(GestureKind k) { return kGestureNames[static_cast<std::size_t>(k)]; }

std::optional<GestureKind> gesture_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kGestureNames.size(); ++i) {
    if (kGestureNames[i] == s) return static_cast<GestureKind>(i);
  }
  return std::nullopt;
}

Json target_to_json(const Target& target) {
  if (const auto* e = std::get_if<ElementId>(&target)) return Json{{"element", to_underlying(*e)}};
  if (const auto* s = std::get_if<SlotId>(&target)) return Json{{"slot", s->value}};
  return nullptr;
}

Target target_from_json(const Json& j) {
  if (j.is_null()) return std::monostate{};
  if (j.contains("element")) return ElementId{j.at("element").get<std::uint32_t>()};
  if (j.contains("slot")) return SlotId{j.at("slot").get<std::string>()};
  throw std::invalid_argument("target must be null, {\"element\":id} or {\"slot\":id}");
}

Json payload_to_json(const Payload& payload) {
  return std::visit(
      [](const auto& p) -> Json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Vec2>) {
          return Json{{"dx", p.x}, {"dy", p.y}};
        } else if constexpr (std::is_same_v<T, Scale>) {
          return Json{{"scale", p.factor}};
        } else if constexpr (std::is_same_v<T, Point2>) {
          return Json{{"x", p.x}, {"y", p.y}};
        } else {
          return nullptr;
        }
      },
      payload);
}

Json to_json(const MoveEvent& e) {
  return Json{{"type", "move"}, {"marker", e.marker_id}, {"t", e.t}, {"x", e.centre.x}, {"y", e.centre.y}};
}

Json to_json(const TapEvent& e) { return Json{{"type", "tap"}, {"t", e.t}, {"peak", e.peak}}; }

Json to_json(const GestureEvent& e) {
  return Json{{"type", "gesture"},
              {"kind", to_string(e.kind)},
              {"t", e.t},
              {"target", target_to_json(e.target)},
              {"payload", payload_to_json(e.payload)}};
}

}  // namespace vip
