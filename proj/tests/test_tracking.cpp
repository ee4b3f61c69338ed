#include "doctest.h"
#include "oracles.hpp"
#include "vip/tracking.hpp"

#include <random>

using namespace vip;

namespace {

Quad shifted(const Quad& q, double dx, double dy) {
  Quad out = q;
  for (auto& c : out.corners) c = {c.x + dx, c.y + dy};
  return out;
}

const Quad kQuad{{Point2{200, 100}, {560, 110}, {550, 380}, {210, 370}}};

}  // namespace

TEST_CASE("marker gate examples") {
  MarkerTrack track(0, {});
  CHECK_FALSE(track.reported_centre().has_value());

  auto ev = track.update(Point2{100, 100}, {}, 0);
  REQUIRE(ev);
  CHECK(ev->centre == Point2{100, 100});

  CHECK_FALSE(track.update(Point2{107, 107}, {}, 33));
  CHECK(*track.reported_centre() == Point2{100, 100});
  CHECK(*track.live_centre() == Point2{107, 107});

  ev = track.update(Point2{108, 100}, {}, 67);
  REQUIRE(ev);
  CHECK(ev->t == 67);
  CHECK(*track.reported_centre() == Point2{108, 100});

  // Motion towards the origin counts too.
  CHECK(track.update(Point2{108, 92}, {}, 100).has_value());
}

TEST_CASE("marker lost after five empty frames") {
  MarkerTrack track(3, {});
  track.update(Point2{50, 50}, {}, 0);
  for (int i = 1; i <= 4; ++i) {
    CHECK_FALSE(track.update(std::nullopt, {}, i * 33.0));
    CHECK(track.reported_centre().has_value());
  }
  CHECK_FALSE(track.update(std::nullopt, {}, 5 * 33.0));
  CHECK_FALSE(track.reported_centre().has_value());
  CHECK(track.lost_frames() == kMarkerLostLimit);
  CHECK_FALSE(track.live_centre().has_value());

  // Reacquisition emits at once even without moving.
  const auto ev = track.update(Point2{50, 50}, {}, 200);
  REQUIRE(ev);
  CHECK(ev->marker_id == 3);
  CHECK(track.lost_frames() == 0);
}

TEST_CASE("mask update computes centroid and hull") {
  BinaryMask m(30, 30);
  for (int y = 10; y < 14; ++y)
    for (int x = 5; x < 9; ++x) m(x, y) = kWhite;
  MarkerTrack track(0, {});
  const auto ev = track.update(m, 10);
  REQUIRE(ev);
  CHECK(ev->centre == Point2{6.5, 11.5});
  CHECK(track.hull().size() == 4);
  CHECK_FALSE(track.update(BinaryMask(30, 30), 20));
  CHECK(track.hull().empty());
}

TEST_CASE("gate matches the reference over random walks") {
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> step(0.0, 4.0);
  for (int walk_no = 0; walk_no < 200; ++walk_no) {
    std::vector<std::optional<Point2>> walk;
    Point2 p{320, 240};
    for (int i = 0; i < 1000; ++i) {
      if (rng() % 40 == 0) {
        walk.emplace_back(std::nullopt);
        continue;
      }
      p = {p.x + step(rng), p.y + step(rng)};
      // Exact 8 px offsets exercise the boundary.
      if (rng() % 50 == 0) p = {std::round(p.x), std::round(p.y)};
      walk.emplace_back(p);
    }
    const auto want = oracle::gate_reference(walk);
    MarkerTrack track(0, {});
    std::vector<std::size_t> got;
    std::optional<Point2> last;
    for (std::size_t i = 0; i < walk.size(); ++i) {
      if (const auto ev = track.update(walk[i], {}, static_cast<double>(i))) {
        got.push_back(i);
        last = ev->centre;
      } else if (walk[i] && last && track.reported_centre()) {
        REQUIRE(std::abs(walk[i]->x - last->x) < kMoveGatePx);
        REQUIRE(std::abs(walk[i]->y - last->y) < kMoveGatePx);
      }
    }
    REQUIRE(got == want);
  }
}

TEST_CASE("display object gate") {
  DisplayObjectTrack track;
  CHECK_FALSE(track.has_pose());
  CHECK(track.update(kQuad));
  REQUIRE(track.homography());

  SUBCASE("3 px shift keeps the pose") {
    CHECK_FALSE(track.update(shifted(kQuad, 3, -3)));
    CHECK(*track.quad() == kQuad);
  }
  SUBCASE("one corner moving 10 px replaces it") {
    Quad moved = kQuad;
    moved.corners[2].x += 10;
    CHECK(track.update(moved));
    CHECK(*track.quad() == moved);
    CHECK(distance(warp_point(*track.homography(), {1, 1}), moved.corners[2]) < 1e-9);
  }
  SUBCASE("pose is held for 14 misses and cleared on the 15th") {
    for (int i = 0; i < 14; ++i) CHECK_FALSE(track.update(std::nullopt));
    CHECK(track.has_pose());
    CHECK(track.stale_frames() == 14);
    CHECK(track.update(std::nullopt));
    CHECK_FALSE(track.has_pose());
    CHECK_FALSE(track.homography().has_value());
  }
  SUBCASE("a detection resets the stale count") {
    for (int i = 0; i < 10; ++i) track.update(std::nullopt);
    track.update(kQuad);
    CHECK(track.stale_frames() == 0);
  }
  SUBCASE("degenerate detections are ignored") {
    CHECK_FALSE(track.update(Quad{{Point2{0, 0}, {100, 100}, {200, 200}, {0, 300}}}));
    CHECK(*track.quad() == kQuad);
  }
}

TEST_CASE("stored homography always maps the unit square onto the quad") {
  oracle::PoseSampler poses(77);
  DisplayObjectTrack track;
  std::mt19937_64 rng(3);
  const std::array<Point2, 4> unit{Point2{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  for (int i = 0; i < 300; ++i) {
    if (rng() % 4 == 0) {
      track.update(std::nullopt);
    } else {
      track.update(Quad{poses.quad(30.0)});
    }
    REQUIRE(track.has_pose() == track.homography().has_value());
    if (track.has_pose()) {
      for (std::size_t k = 0; k < 4; ++k) REQUIRE(distance(warp_point(*track.homography(), unit[k]), track.quad()->corners[k]) < 1e-9);
    }
  }
}
