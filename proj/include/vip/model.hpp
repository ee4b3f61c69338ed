#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vip/events.hpp"
#include "vip/image.hpp"
#include "vip/tracking.hpp"

namespace vip {

enum class ElementKind { Input, Output };
enum class Mode { Edit, Run };
enum class ActionKind { MovieStart, MovieStop, MovieScroll, Custom };

std::string_view to_string(ElementKind k);
std::string_view to_string(Mode m);
std::string_view to_string(ActionKind a);

struct ActionBinding {
  ActionKind action = ActionKind::MovieStart;
  /// Name of a Custom action; empty otherwise.
  std::string custom_name;
  std::map<std::string, std::string> params;

  /// "movie_start", ..., or the custom name.
  std::string name() const;

  bool operator==(const ActionBinding&) const = default;
};

/// Axis-aligned rectangle in unit-square model coordinates.
struct Rect {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  Point2 centre() const { return {x + w / 2.0, y + h / 2.0}; }
  bool contains(Point2 p) const { return p.x >= x && p.x <= x + w && p.y >= y && p.y <= y + h; }
  /// True inside the outer `fraction` band of the rect (by width or height).
  bool in_border_band(Point2 p, double fraction) const;

  bool operator==(const Rect&) const = default;
};

inline constexpr double kDefaultElementWidth = 0.2;
inline constexpr double kDefaultElementHeight = 0.1;
inline constexpr double kMinElementSize = 0.02;

/// Shrinks to at most the unit square, then shifts inside it.
Rect clamp_to_unit(Rect r);

struct Element {
  ElementId id{};
  ElementKind kind = ElementKind::Input;
  Rect rect{};
  std::string label;
  std::optional<ActionBinding> binding;
  bool locked = false;

  bool operator==(const Element&) const = default;
};

/// An element prototype on the palette.
struct PaletteSlot {
  SlotId id;
  ElementKind kind = ElementKind::Input;
  std::string label;
  std::optional<ActionBinding> binding;

  bool operator==(const PaletteSlot&) const = default;
};

struct Palette {
  std::vector<PaletteSlot> slots;

  const PaletteSlot* find(const SlotId& id) const;
  /// Distinct bindings offered by the slots, in slot order.
  std::vector<ActionBinding> available_actions() const;
  /// Throws std::invalid_argument on duplicate slot ids.
  void validate() const;

  bool operator==(const Palette&) const = default;
};

/// Where the palette sits on the workbench, in camera pixels: a column of
/// equal slots down the left edge of the frame.
struct PaletteRegion {
  double left = 0.0;
  double width = 80.0;
  double top = 20.0;
  double slot_height = 60.0;

  std::optional<std::size_t> slot_at(Point2 image_pos, std::size_t slot_count) const;
  Point2 slot_centre(std::size_t index) const;
};

using Selection = Target;

struct Effect {
  TimeMs t = 0.0;
  ElementId element{};
  ActionBinding action;

  bool operator==(const Effect&) const = default;
};

Json to_json(const Effect& e);

struct SessionState {
  Mode mode = Mode::Edit;
  std::vector<Element> layout;
  Selection selection{};
  Palette palette;
  std::vector<Effect> effects_log;

  const Element* find(ElementId id) const;
  Element* find(ElementId id);
  /// Topmost element containing the model point (painter's order).
  const Element* element_at(Point2 model_pos) const;
  ElementId next_element_id() const;

  /// Mode, layout and palette; the persisted part of a session.
  bool same_design(const SessionState& other) const;
};

class UnknownTargetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Applies one gesture. Returns the effects it fired (also appended to the
/// state's effects log). Throws UnknownTargetError for a missing target.
std::vector<Effect> apply_gesture(SessionState& s, const GestureEvent& g);

inline constexpr std::uint8_t kInputColour[3] = {70, 130, 255};
inline constexpr std::uint8_t kOutputColour[3] = {255, 170, 60};
inline constexpr std::uint8_t kHighlightColour[3] = {255, 255, 0};

/// Projects the layout through the display-object pose. Black where no
/// element is drawn; all black without a pose.
ImageRGB8 render_layout(const SessionState& s, const DisplayObjectTrack& dobj, int width, int height);

class SessionParseError : public std::runtime_error {
 public:
  SessionParseError(const std::string& what, std::size_t line, std::size_t column)
      : std::runtime_error(what), line_(line), column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class VersionMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kSessionVersion = 1;

Json palette_to_json(const Palette& p);
Palette palette_from_json(const Json& j);
Json layout_to_json(const std::vector<Element>& layout);

/// {"version":1,"mode":…,"palette":[…],"layout":[…]}; the effects log and
/// selection are not persisted.
std::string save_session(const SessionState& s);
SessionState load_session(std::string_view bytes);

}  // namespace vip
