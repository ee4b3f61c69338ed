#include "vip/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace vip {
namespace {

constexpr std::string_view kActionNames[] = {"movie_start", "movie_stop", "movie_scroll", "custom"};

template <class Enum, std::size_t N>
Enum enum_from(std::string_view s, const std::string_view (&names)[N], const char* what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<Enum>(i);
  }
  throw std::invalid_argument(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

constexpr std::string_view kKindNames[] = {"input", "output"};
constexpr std::string_view kModeNames[] = {"edit", "run"};

const Element& require_element(const SessionState& s, const Target& target) {
  const auto* id = std::get_if<ElementId>(&target);
  if (!id) throw UnknownTargetError("gesture needs an element target");
  const Element* e = s.find(*id);
  if (!e) throw UnknownTargetError("element " + std::to_string(to_underlying(*id)) + " is not in the layout");
  return *e;
}

double segment_distance(Point2 p, Point2 a, Point2 b) {
  const Vec2 ab = b - a;
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  double t = len2 > 0.0 ? ((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, {a.x + t * ab.x, a.y + t * ab.y});
}

Json binding_to_json(const std::optional<ActionBinding>& b) {
  if (!b) return nullptr;
  Json j{{"action", to_string(b->action)}};
  if (b->action == ActionKind::Custom) j["name"] = b->custom_name;
  Json params = Json::object();
  for (const auto& [k, v] : b->params) params[k] = v;
  j["params"] = params;
  return j;
}

std::optional<ActionBinding> binding_from_json(const Json& j) {
  if (j.is_null()) return std::nullopt;
  ActionBinding b;
  b.action = enum_from<ActionKind>(j.at("action").get<std::string>(), kActionNames, "action");
  if (b.action == ActionKind::Custom) b.custom_name = j.at("name").get<std::string>();
  if (j.contains("params")) {
    for (const auto& [k, v] : j.at("params").items()) b.params[k] = v.get<std::string>();
  }
  return b;
}

std::pair<std::size_t, std::size_t> line_and_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

std::string_view to_string(ElementKind k) { return kKindNames[static_cast<std::size_t>(k)]; }
std::string_view to_string(Mode m) { return kModeNames[static_cast<std::size_t>(m)]; }
std::string_view to_string(ActionKind a) { return kActionNames[static_cast<std::size_t>(a)]; }

std::string ActionBinding::name() const {
  return action == ActionKind::Custom ? custom_name : std::string(to_string(action));
}

bool Rect::in_border_band(Point2 p, double fraction) const {
  if (!contains(p)) return false;
  const double bx = fraction * w;
  const double by = fraction * h;
  return p.x <= x + bx || p.x >= x + w - bx || p.y <= y + by || p.y >= y + h - by;
}

Rect clamp_to_unit(Rect r) {
  r.w = std::min(r.w, 1.0);
  r.h = std::min(r.h, 1.0);
  r.x = std::clamp(r.x, 0.0, 1.0 - r.w);
  r.y = std::clamp(r.y, 0.0, 1.0 - r.h);
  return r;
}

const PaletteSlot* Palette::find(const SlotId& id) const {
  const auto it = std::find_if(slots.begin(), slots.end(), [&](const PaletteSlot& s) { return s.id == id; });
  return it == slots.end() ? nullptr : &*it;
}

std::vector<ActionBinding> Palette::available_actions() const {
  std::vector<ActionBinding> out;
  for (const auto& s : slots) {
    if (s.binding && std::find(out.begin(), out.end(), *s.binding) == out.end()) out.push_back(*s.binding);
  }
  return out;
}

void Palette::validate() const {
  std::set<SlotId> seen;
  for (const auto& s : slots) {
    if (!seen.insert(s.id).second) throw std::invalid_argument("duplicate palette slot id '" + s.id.value + "'");
  }
}

std::optional<std::size_t> PaletteRegion::slot_at(Point2 p, std::size_t slot_count) const {
  if (p.x < left || p.x >= left + width || p.y < top) return std::nullopt;
  const auto index = static_cast<std::size_t>((p.y - top) / slot_height);
  if (index >= slot_count) return std::nullopt;
  return index;
}

Point2 PaletteRegion::slot_centre(std::size_t index) const {
  return {left + width / 2.0, top + slot_height * (static_cast<double>(index) + 0.5)};
}

Json to_json(const Effect& e) {
  return Json{{"type", "effect"}, {"t", e.t}, {"element", to_underlying(e.element)}, {"action", e.action.name()}};
}

const Element* SessionState::find(ElementId id) const {
  const auto it = std::find_if(layout.begin(), layout.end(), [id](const Element& e) { return e.id == id; });
  return it == layout.end() ? nullptr : &*it;
}

Element* SessionState::find(ElementId id) {
  return const_cast<Element*>(static_cast<const SessionState&>(*this).find(id));
}

const Element* SessionState::element_at(Point2 model_pos) const {
  for (auto it = layout.rbegin(); it != layout.rend(); ++it) {
    if (it->rect.contains(model_pos)) return &*it;
  }
  return nullptr;
}

ElementId SessionState::next_element_id() const {
  std::uint32_t next = 1;
  for (const auto& e : layout) next = std::max(next, to_underlying(e.id) + 1);
  return ElementId{next};
}

bool SessionState::same_design(const SessionState& other) const {
  return mode == other.mode && layout == other.layout && palette == other.palette;
}

std::vector<Effect> apply_gesture(SessionState& s, const GestureEvent& g) {
  std::vector<Effect> fired;
  switch (g.kind) {
    case GestureKind::Scan:
      if (std::holds_alternative<ElementId>(g.target)) require_element(s, g.target);
      break;

    case GestureKind::Select:
      if (const auto* slot = std::get_if<SlotId>(&g.target)) {
        if (!s.palette.find(*slot)) throw UnknownTargetError("palette slot '" + slot->value + "' does not exist");
      } else if (std::holds_alternative<ElementId>(g.target)) {
        require_element(s, g.target);
      }
      s.selection = g.target;
      break;

    case GestureKind::Place: {
      const Target& source = std::holds_alternative<std::monostate>(g.target) ? s.selection : g.target;
      const auto* slot_id = std::get_if<SlotId>(&source);
      if (!slot_id) throw UnknownTargetError("place needs a palette slot");
      const PaletteSlot* slot = s.palette.find(*slot_id);
      if (!slot) throw UnknownTargetError("palette slot '" + slot_id->value + "' does not exist");
      const auto* pos = std::get_if<Point2>(&g.payload);
      if (!pos) throw std::invalid_argument("place needs a position payload");
      Element e;
      e.id = s.next_element_id();
      e.kind = slot->kind;
      e.label = slot->label;
      e.binding = slot->binding;
      e.rect = clamp_to_unit({pos->x - kDefaultElementWidth / 2.0, pos->y - kDefaultElementHeight / 2.0,
                              kDefaultElementWidth, kDefaultElementHeight});
      s.selection = e.id;
      s.layout.push_back(std::move(e));
      break;
    }

    case GestureKind::Drag: {
      const ElementId id = require_element(s, g.target).id;
      Element& e = *s.find(id);
      const auto* v = std::get_if<Vec2>(&g.payload);
      if (!v) throw std::invalid_argument("drag needs a vector payload");
      if (!e.locked) e.rect = clamp_to_unit({e.rect.x + v->x, e.rect.y + v->y, e.rect.w, e.rect.h});
      break;
    }

    case GestureKind::Resize: {
      const ElementId id = require_element(s, g.target).id;
      Element& e = *s.find(id);
      const auto* sc = std::get_if<Scale>(&g.payload);
      if (!sc || !(sc->factor > 0.0)) throw std::invalid_argument("resize needs a positive scale payload");
      if (!e.locked) {
        const Point2 c = e.rect.centre();
        const double w = std::max(kMinElementSize, e.rect.w * sc->factor);
        const double h = std::max(kMinElementSize, e.rect.h * sc->factor);
        e.rect = clamp_to_unit({c.x - w / 2.0, c.y - h / 2.0, w, h});
      }
      break;
    }

    case GestureKind::Lock: {
      const ElementId id = require_element(s, g.target).id;
      Element& e = *s.find(id);
      e.locked = !e.locked;
      break;
    }

    case GestureKind::Click: {
      const Element& e = require_element(s, g.target);
      if (s.mode == Mode::Run && e.binding) {
        Effect fx{g.t, e.id, *e.binding};
        s.effects_log.push_back(fx);
        fired.push_back(std::move(fx));
      }
      break;
    }

    case GestureKind::Wipe:
      s.mode = s.mode == Mode::Edit ? Mode::Run : Mode::Edit;
      s.selection = std::monostate{};
      break;
  }
  return fired;
}

ImageRGB8 render_layout(const SessionState& s, const DisplayObjectTrack& dobj, int width, int height) {
  ImageRGB8 out(width, height);
  if (!dobj.has_pose()) return out;
  const Homography& h = *dobj.homography();

  for (const Element& e : s.layout) {
    std::array<Point2, 4> q{};
    try {
      const Rect& r = e.rect;
      q = {warp_point(h, {r.x, r.y}), warp_point(h, {r.x + r.w, r.y}), warp_point(h, {r.x + r.w, r.y + r.h}),
           warp_point(h, {r.x, r.y + r.h})};
    } catch (const AtInfinityError&) {
      continue;
    }
    double area = 0.0;
    for (std::size_t i = 0; i < 4; ++i) area += q[i].x * q[(i + 1) % 4].y - q[(i + 1) % 4].x * q[i].y;
    const double sign = area >= 0.0 ? 1.0 : -1.0;

    double min_x = q[0].x, max_x = q[0].x, min_y = q[0].y, max_y = q[0].y;
    for (const Point2& p : q) {
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
    const int x0 = std::max(0, static_cast<int>(std::ceil(min_x)));
    const int x1 = std::min(width - 1, static_cast<int>(std::floor(max_x)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(min_y)));
    const int y1 = std::min(height - 1, static_cast<int>(std::floor(max_y)));

    const bool selected = s.selection == Target{e.id};
    const std::uint8_t* base = e.kind == ElementKind::Input ? kInputColour : kOutputColour;
    const int shade = e.locked ? 2 : 1;

    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Point2 p{static_cast<double>(x), static_cast<double>(y)};
        bool inside = true;
        for (std::size_t i = 0; i < 4 && inside; ++i) inside = sign * cross(q[i], q[(i + 1) % 4], p) >= 0.0;
        if (!inside) continue;
        bool rim = false;
        if (selected) {
          for (std::size_t i = 0; i < 4 && !rim; ++i) rim = segment_distance(p, q[i], q[(i + 1) % 4]) < 2.0;
        }
        std::uint8_t* px = out.at(x, y);
        for (std::size_t c = 0; c < 3; ++c) {
          px[c] = rim ? kHighlightColour[c] : static_cast<std::uint8_t>(base[c] / shade);
        }
      }
    }

    // Label marker: a 3x3 white dot at the projected centre.
    try {
      const Point2 c = warp_point(h, e.rect.centre());
      const int cx = static_cast<int>(std::lround(c.x));
      const int cy = static_cast<int>(std::lround(c.y));
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (!out.contains(cx + dx, cy + dy)) continue;
          std::uint8_t* px = out.at(cx + dx, cy + dy);
          px[0] = px[1] = px[2] = 255;
        }
      }
    } catch (const AtInfinityError&) {
    }
  }
  return out;
}

Json palette_to_json(const Palette& p) {
  Json slots = Json::array();
  for (const auto& s : p.slots) {
    slots.push_back(Json{{"id", s.id.value},
                         {"kind", to_string(s.kind)},
                         {"label", s.label},
                         {"binding", binding_to_json(s.binding)}});
  }
  return slots;
}

Palette palette_from_json(const Json& j) {
  Palette p;
  for (const auto& s : j) {
    PaletteSlot slot;
    slot.id = SlotId{s.at("id").get<std::string>()};
    slot.kind = enum_from<ElementKind>(s.at("kind").get<std::string>(), kKindNames, "element kind");
    slot.label = s.value("label", std::string{});
    slot.binding = s.contains("binding") ? binding_from_json(s.at("binding")) : std::nullopt;
    p.slots.push_back(std::move(slot));
  }
  p.validate();
  return p;
}

Json layout_to_json(const std::vector<Element>& layout) {
  Json out = Json::array();
  for (const auto& e : layout) {
    out.push_back(Json{{"id", to_underlying(e.id)},
                       {"kind", to_string(e.kind)},
                       {"rect", {e.rect.x, e.rect.y, e.rect.w, e.rect.h}},
                       {"label", e.label},
                       {"binding", binding_to_json(e.binding)},
                       {"locked", e.locked}});
  }
  return out;
}

std::string save_session(const SessionState& s) {
  Json doc{{"version", kSessionVersion},
           {"mode", to_string(s.mode)},
           {"palette", palette_to_json(s.palette)},
           {"layout", layout_to_json(s.layout)}};
  return doc.dump(2) + "\n";
}

SessionState load_session(std::string_view bytes) {
  Json doc;
  try {
    doc = Json::parse(bytes.begin(), bytes.end());
  } catch (const Json::parse_error& e) {
    const auto [line, col] = line_and_column(bytes, e.byte == 0 ? 0 : e.byte - 1);
    throw SessionParseError("session parse error at line " + std::to_string(line) + ", column " +
                                std::to_string(col) + ": " + e.what(),
                            line, col);
  }

  try {
    if (!doc.is_object()) throw std::invalid_argument("session document must be a JSON object");
    const int version = doc.at("version").get<int>();
    if (version != kSessionVersion) {
      throw VersionMismatchError("session version " + std::to_string(version) + " is not supported (expected " +
                                 std::to_string(kSessionVersion) + ")");
    }
    SessionState s;
    s.mode = enum_from<Mode>(doc.at("mode").get<std::string>(), kModeNames, "mode");
    s.palette = palette_from_json(doc.at("palette"));
    std::set<std::uint32_t> ids;
    for (const auto& j : doc.at("layout")) {
      Element e;
      e.id = ElementId{j.at("id").get<std::uint32_t>()};
      if (!ids.insert(to_underlying(e.id)).second) throw std::invalid_argument("duplicate element id");
      e.kind = enum_from<ElementKind>(j.at("kind").get<std::string>(), kKindNames, "element kind");
      const auto& r = j.at("rect");
      if (!r.is_array() || r.size() != 4) throw std::invalid_argument("rect must be [x,y,w,h]");
      e.rect = {r[0].get<double>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>()};
      if (!(e.rect.w > 0 && e.rect.h > 0 && e.rect.x >= 0 && e.rect.y >= 0 && e.rect.x + e.rect.w <= 1.0 + 1e-12 &&
            e.rect.y + e.rect.h <= 1.0 + 1e-12)) {
        throw std::invalid_argument("rect must lie inside the unit square with positive size");
      }
      e.label = j.value("label", std::string{});
      e.binding = j.contains("binding") ? binding_from_json(j.at("binding")) : std::nullopt;
      e.locked = j.value("locked", false);
      s.layout.push_back(std::move(e));
    }
    return s;
  } catch (const VersionMismatchError&) {
    throw;
  } catch (const std::exception& e) {
    throw SessionParseError(std::string("malformed session document: ") + e.what(), 0, 0);
  }
}

}  // namespace vip
