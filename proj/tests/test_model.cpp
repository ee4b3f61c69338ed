#include "doctest.h"
#include "oracles.hpp"
#include "vip/model.hpp"

#include <random>

using namespace vip;

namespace {

Palette demo_palette() {
  Palette p;
  p.slots.push_back({SlotId{"button"}, ElementKind::Input, "Play", ActionBinding{ActionKind::MovieStart, {}, {}}});
  p.slots.push_back({SlotId{"screen"}, ElementKind::Output, "Screen", std::nullopt});
  ActionBinding custom{ActionKind::Custom, "beep", {{"volume", "3"}, {"pitch", "high"}}};
  p.slots.push_back({SlotId{"beeper"}, ElementKind::Input, "Beep", custom});
  return p;
}

SessionState with_element(Rect r, bool locked = false) {
  SessionState s;
  s.palette = demo_palette();
  Element e{ElementId{1}, ElementKind::Input, r, "Play", ActionBinding{ActionKind::MovieStart, {}, {}}, locked};
  s.layout.push_back(e);
  return s;
}

bool close(const Rect& a, const Rect& b, double eps = 1e-12) {
  return std::abs(a.x - b.x) <= eps && std::abs(a.y - b.y) <= eps && std::abs(a.w - b.w) <= eps &&
         std::abs(a.h - b.h) <= eps;
}

bool inside_unit(const Rect& r) {
  return r.x >= 0 && r.y >= 0 && r.w > 0 && r.h > 0 && r.x + r.w <= 1 + 1e-12 && r.y + r.h <= 1 + 1e-12;
}

std::size_t count_nonblack(const ImageRGB8& img) {
  std::size_t n = 0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) n += img(x, y, 0) || img(x, y, 1) || img(x, y, 2);
  return n;
}

}  // namespace

TEST_CASE("place instantiates the selected prototype") {
  SessionState s;
  s.palette = demo_palette();
  apply_gesture(s, {GestureKind::Select, 10, SlotId{"button"}, {}});
  CHECK(s.selection == Target{SlotId{"button"}});
  apply_gesture(s, {GestureKind::Place, 20, SlotId{"button"}, Point2{0.3, 0.4}});
  REQUIRE(s.layout.size() == 1);
  const Element& e = s.layout[0];
  CHECK(e.id == ElementId{1});
  CHECK(close(e.rect, {0.2, 0.35, 0.2, 0.1}, 1e-15));
  CHECK(e.binding->action == ActionKind::MovieStart);
  CHECK(s.selection == Target{ElementId{1}});

  // Near a border the rect is clamped, not rejected.
  apply_gesture(s, {GestureKind::Place, 30, SlotId{"screen"}, Point2{0.95, 0.02}});
  REQUIRE(s.layout.size() == 2);
  CHECK(s.layout[1].id == ElementId{2});
  CHECK(close(s.layout[1].rect, {0.8, 0.0, 0.2, 0.1}));
  CHECK(s.layout[1].kind == ElementKind::Output);

  // Without an explicit slot the current selection is used.
  s.selection = SlotId{"beeper"};
  apply_gesture(s, {GestureKind::Place, 40, {}, Point2{0.5, 0.5}});
  CHECK(s.layout.back().binding->name() == "beep");
}

TEST_CASE("resize scales about the centre") {
  SessionState s = with_element({0.4, 0.4, 0.2, 0.1});
  apply_gesture(s, {GestureKind::Resize, 0, ElementId{1}, Scale{1.5}});
  CHECK(close(s.layout[0].rect, {0.35, 0.375, 0.3, 0.15}, 1e-12));

  apply_gesture(s, {GestureKind::Resize, 0, ElementId{1}, Scale{0.01}});
  CHECK(s.layout[0].rect.w == doctest::Approx(kMinElementSize));
  CHECK(s.layout[0].rect.h == doctest::Approx(kMinElementSize));

  apply_gesture(s, {GestureKind::Resize, 0, ElementId{1}, Scale{500}});
  CHECK(close(s.layout[0].rect, {0, 0, 1, 1}));
  CHECK_THROWS_AS(apply_gesture(s, {GestureKind::Resize, 0, ElementId{1}, Scale{-1}}), std::invalid_argument);
}

TEST_CASE("drag translates and clamps") {
  SessionState s = with_element({0.4, 0.4, 0.2, 0.1});
  apply_gesture(s, {GestureKind::Drag, 0, ElementId{1}, Vec2{0.1, -0.05}});
  CHECK(close(s.layout[0].rect, {0.5, 0.35, 0.2, 0.1}, 1e-12));
  apply_gesture(s, {GestureKind::Drag, 0, ElementId{1}, Vec2{2.0, 2.0}});
  CHECK(close(s.layout[0].rect, {0.8, 0.9, 0.2, 0.1}, 1e-12));
}

TEST_CASE("locked elements ignore drag and resize") {
  SessionState s = with_element({0.4, 0.4, 0.2, 0.1});
  apply_gesture(s, {GestureKind::Lock, 0, ElementId{1}, {}});
  CHECK(s.layout[0].locked);
  const Rect before = s.layout[0].rect;
  apply_gesture(s, {GestureKind::Drag, 0, ElementId{1}, Vec2{0.1, 0.1}});
  apply_gesture(s, {GestureKind::Resize, 0, ElementId{1}, Scale{2}});
  CHECK(s.layout[0].rect == before);
  apply_gesture(s, {GestureKind::Lock, 0, ElementId{1}, {}});
  CHECK_FALSE(s.layout[0].locked);
}

TEST_CASE("click fires the binding only in run mode") {
  SessionState s = with_element({0.4, 0.4, 0.2, 0.1});
  CHECK(apply_gesture(s, {GestureKind::Click, 5, ElementId{1}, Point2{0.5, 0.45}}).empty());

  apply_gesture(s, {GestureKind::Wipe, 6, {}, {}});
  CHECK(s.mode == Mode::Run);
  const auto layout = s.layout;
  const auto fx = apply_gesture(s, {GestureKind::Click, 7, ElementId{1}, Point2{0.5, 0.45}});
  REQUIRE(fx.size() == 1);
  CHECK(fx[0] == Effect{7, ElementId{1}, ActionBinding{ActionKind::MovieStart, {}, {}}});
  CHECK(s.effects_log == fx);
  CHECK(s.layout == layout);
  CHECK(to_json(fx[0]).dump() == R"({"type":"effect","t":7.0,"element":1,"action":"movie_start"})");
}

TEST_CASE("wipe toggles mode and clears the selection") {
  SessionState s = with_element({0.1, 0.1, 0.2, 0.1});
  s.selection = ElementId{1};
  apply_gesture(s, {GestureKind::Wipe, 0, {}, {}});
  CHECK(s.mode == Mode::Run);
  CHECK(std::holds_alternative<std::monostate>(s.selection));
  apply_gesture(s, {GestureKind::Wipe, 1, {}, {}});
  CHECK(s.mode == Mode::Edit);
}

TEST_CASE("unknown targets") {
  SessionState s = with_element({0.1, 0.1, 0.2, 0.1});
  CHECK_THROWS_AS(apply_gesture(s, {GestureKind::Drag, 0, ElementId{9}, Vec2{}}), UnknownTargetError);
  CHECK_THROWS_AS(apply_gesture(s, {GestureKind::Select, 0, SlotId{"nope"}, {}}), UnknownTargetError);
  CHECK_THROWS_AS(apply_gesture(s, {GestureKind::Place, 0, SlotId{"nope"}, Point2{}}), UnknownTargetError);
  CHECK_THROWS_AS(apply_gesture(s, {GestureKind::Click, 0, {}, {}}), UnknownTargetError);
}

TEST_CASE("random gesture streams keep rects in the unit square") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-0.2, 1.2);
  for (int run = 0; run < 50; ++run) {
    SessionState s;
    s.palette = demo_palette();
    SessionState twin = s;
    for (int i = 0; i < 300; ++i) {
      GestureEvent g{static_cast<GestureKind>(rng() % 8), double(i), {}, {}};
      const auto any_element = [&]() -> Target {
        if (s.layout.empty()) return {};
        return s.layout[rng() % s.layout.size()].id;
      };
      switch (g.kind) {
        case GestureKind::Place:
          g.target = s.palette.slots[rng() % s.palette.slots.size()].id;
          g.payload = Point2{u(rng), u(rng)};
          break;
        case GestureKind::Drag:
          g.target = any_element();
          g.payload = Vec2{u(rng) - 0.5, u(rng) - 0.5};
          break;
        case GestureKind::Resize:
          g.target = any_element();
          g.payload = Scale{0.1 + 3.0 * std::abs(u(rng))};
          break;
        case GestureKind::Lock:
        case GestureKind::Click:
          g.target = any_element();
          break;
        default:
          break;
      }
      if (g.kind != GestureKind::Place && g.kind != GestureKind::Wipe && g.kind != GestureKind::Scan &&
          g.kind != GestureKind::Select && std::holds_alternative<std::monostate>(g.target)) {
        continue;
      }
      const Mode before = s.mode;
      const auto fx = apply_gesture(s, g);
      const auto fx_twin = apply_gesture(twin, g);
      REQUIRE(fx == fx_twin);
      if (before == Mode::Edit) REQUIRE(fx.empty());
      for (const auto& e : s.layout) REQUIRE(inside_unit(e.rect));
    }
    REQUIRE(s.layout == twin.layout);
  }
}

TEST_CASE("render_layout") {
  const Quad pose{{Point2{100, 60}, {520, 90}, {500, 400}, {130, 380}}};
  DisplayObjectTrack dobj;
  dobj.set_pose(pose);

  SUBCASE("no pose or empty layout is black") {
    SessionState s = with_element({0, 0, 1, 1});
    CHECK(count_nonblack(render_layout(s, DisplayObjectTrack{}, 64, 48)) == 0);
    SessionState empty;
    CHECK(count_nonblack(render_layout(empty, dobj, 640, 480)) == 0);
  }
  SUBCASE("full-surface element fills the pose quad") {
    SessionState s = with_element({0, 0, 1, 1});
    const ImageRGB8 img = render_layout(s, dobj, 640, 480);
    int bad = 0;
    for (int y = 0; y < 480; ++y) {
      for (int x = 0; x < 640; ++x) {
        const bool lit = img(x, y, 0) || img(x, y, 1) || img(x, y, 2);
        if (lit == oracle::in_convex(pose.corners, {double(x), double(y)})) continue;
        // Disagreement is only allowed within a pixel of the boundary.
        bool near = false;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx)
            near |= oracle::in_convex(pose.corners, {double(x + dx), double(y + dy)}) != lit;
        bad += !near;
      }
    }
    CHECK(bad == 0);
    CHECK(img(300, 200, 0) == kInputColour[0]);
    CHECK(img(300, 200, 2) == kInputColour[2]);
  }
  SUBCASE("rendered corners sit on the warped corners") {
    SessionState s = with_element({0.25, 0.3, 0.4, 0.35});
    const ImageRGB8 img = render_layout(s, dobj, 640, 480);
    const Rect r = s.layout[0].rect;
    const std::array<Point2, 4> model{Point2{r.x, r.y}, {r.x + r.w, r.y}, {r.x + r.w, r.y + r.h}, {r.x, r.y + r.h}};
    static constexpr double kDiag[4][2] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
    for (std::size_t k = 0; k < 4; ++k) {
      const Point2 want = warp_point(*dobj.homography(), model[k]);
      // Rendered corner: the lit pixel furthest along the corner's diagonal.
      Point2 best{};
      double score = -1e300;
      for (int y = 0; y < 480; ++y)
        for (int x = 0; x < 640; ++x)
          if (img(x, y, 0) || img(x, y, 1) || img(x, y, 2)) {
            const double sc = kDiag[k][0] * x + kDiag[k][1] * y;
            if (sc > score) score = sc, best = {double(x), double(y)};
          }
      CHECK(std::abs(best.x - want.x) <= 1.0);
      CHECK(std::abs(best.y - want.y) <= 1.0);
    }
  }
  SUBCASE("selection and lock change the look") {
    SessionState s = with_element({0.2, 0.2, 0.6, 0.6});
    const ImageRGB8 plain = render_layout(s, dobj, 640, 480);
    s.selection = ElementId{1};
    const ImageRGB8 selected = render_layout(s, dobj, 640, 480);
    CHECK(plain != selected);
    s.selection = {};
    s.layout[0].locked = true;
    const ImageRGB8 locked = render_layout(s, dobj, 640, 480);
    CHECK(locked(300, 200, 2) == kInputColour[2] / 2);
  }
}

TEST_CASE("session documents") {
  SUBCASE("exact layout of a saved document") {
    SessionState s = with_element({0.25, 0.5, 0.2, 0.1});
    s.palette.slots.resize(1);
    CHECK(save_session(s) == R"({
  "version": 1,
  "mode": "edit",
  "palette": [
    {
      "id": "button",
      "kind": "input",
      "label": "Play",
      "binding": {
        "action": "movie_start",
        "params": {}
      }
    }
  ],
  "layout": [
    {
      "id": 1,
      "kind": "input",
      "rect": [
        0.25,
        0.5,
        0.2,
        0.1
      ],
      "label": "Play",
      "binding": {
        "action": "movie_start",
        "params": {}
      },
      "locked": false
    }
  ]
}
)");
  }
  SUBCASE("round trip of random states") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 0.5);
    for (int i = 0; i < 100; ++i) {
      SessionState s;
      s.palette = demo_palette();
      s.mode = rng() % 2 ? Mode::Run : Mode::Edit;
      const std::size_t n = rng() % 6;
      for (std::size_t k = 0; k < n; ++k) {
        Element e;
        e.id = ElementId{static_cast<std::uint32_t>(k * 3 + 1)};
        e.kind = rng() % 2 ? ElementKind::Input : ElementKind::Output;
        e.rect = clamp_to_unit({u(rng), u(rng), 0.02 + u(rng), 0.02 + u(rng)});
        e.label = "el" + std::to_string(k);
        if (rng() % 2) e.binding = s.palette.slots[rng() % s.palette.slots.size()].binding;
        e.locked = rng() % 2;
        s.layout.push_back(e);
      }
      s.selection = SlotId{"button"};
      s.effects_log.push_back({1, ElementId{1}, {}});
      const SessionState back = load_session(save_session(s));
      REQUIRE(back.same_design(s));
      REQUIRE(back.layout == s.layout);
      REQUIRE(back.palette == s.palette);
      CHECK(back.effects_log.empty());
      CHECK(std::holds_alternative<std::monostate>(back.selection));
      CHECK(save_session(back) == save_session(s));
    }
  }
  SUBCASE("truncated document reports a position") {
    const std::string doc = save_session(with_element({0.1, 0.1, 0.2, 0.2}));
    try {
      load_session(doc.substr(0, doc.size() / 2));
      FAIL("expected a parse error");
    } catch (const SessionParseError& e) {
      CHECK(e.line() > 1);
      CHECK(e.column() >= 1);
    }
  }
  SUBCASE("version 99") {
    std::string doc = save_session(SessionState{});
    doc.replace(doc.find("1"), 1, "99");
    CHECK_THROWS_AS(load_session(doc), VersionMismatchError);
  }
  SUBCASE("schema violations") {
    CHECK_THROWS_AS(load_session("[]"), SessionParseError);
    CHECK_THROWS_AS(load_session(R"({"version":1,"mode":"fly","palette":[],"layout":[]})"), SessionParseError);
    CHECK_THROWS_AS(load_session(R"({"version":1,"mode":"edit","palette":[],"layout":[{"id":1,"kind":"input","rect":[0.9,0,0.2,0.1]}]})"),
                    SessionParseError);
    CHECK_THROWS_AS(load_session(R"({"version":1,"mode":"edit","palette":[{"id":"a","kind":"input"},{"id":"a","kind":"output"}],"layout":[]})"),
                    SessionParseError);
  }
}

TEST_CASE("palette") {
  const Palette p = demo_palette();
  CHECK(p.find(SlotId{"screen"})->kind == ElementKind::Output);
  CHECK(p.find(SlotId{"x"}) == nullptr);
  CHECK(p.available_actions().size() == 2);
  Palette dup = p;
  dup.slots.push_back(dup.slots[0]);
  CHECK_THROWS_AS(dup.validate(), std::invalid_argument);

  const PaletteRegion region;
  CHECK(region.slot_at(region.slot_centre(2), 3) == std::optional<std::size_t>{2});
  CHECK_FALSE(region.slot_at(region.slot_centre(3), 3).has_value());
  CHECK_FALSE(region.slot_at({200, 50}, 3).has_value());
}
