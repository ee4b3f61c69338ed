#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "json.hpp"
#include "vip/audio.hpp"
#include "vip/geometry.hpp"
#include "vip/tracking.hpp"

namespace vip {

using Json = nlohmann::ordered_json;

enum class ElementId : std::uint32_t {};

inline std::uint32_t to_underlying(ElementId id) { return static_cast<std::uint32_t>(id); }

struct SlotId {
  std::string value;

  auto operator<=>(const SlotId&) const = default;
};

enum class GestureKind { Scan, Select, Place, Drag, Resize, Wipe, Lock, Click };

std::string_view to_string(GestureKind k);
std::optional<GestureKind> gesture_kind_from_string(std::string_view s);

/// Nothing, a layout element, or a palette slot.
using Target = std::variant<std::monostate, ElementId, SlotId>;

/// Scale factor for Resize.
struct Scale {
  double factor = 1.0;

  bool operator==(const Scale&) const = default;
};

/// Drag vector, resize factor, or a model-space position (Place, Scan).
using Payload = std::variant<std::monostate, Vec2, Scale, Point2>;

struct GestureEvent {
  GestureKind kind = GestureKind::Scan;
  TimeMs t = 0.0;
  Target target{};
  Payload payload{};

  bool operator==(const GestureEvent&) const = default;
};

Json target_to_json(const Target& target);
Target target_from_json(const Json& j);
Json payload_to_json(const Payload& payload);

// Event-log lines.
Json to_json(const MoveEvent& e);
Json to_json(const TapEvent& e);
Json to_json(const GestureEvent& e);

}  // namespace vip
