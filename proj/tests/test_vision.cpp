#include "doctest.h"
#include "oracles.hpp"
#include "vip/vision.hpp"

#include <filesystem>
#include <random>

using namespace vip;

namespace {

ImageRGB8 random_rgb(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ImageRGB8 img(w, h);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng() & 0xFF);
  return img;
}

BinaryMask disk_mask(int w, int h, double cx, double cy, double r) {
  BinaryMask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) m(x, y) = kWhite;
  return m;
}

}  // namespace

TEST_CASE("rgb_to_hsv fixed points") {
  ImageRGB8 img(3, 1);
  img(1, 0, 0) = img(1, 0, 1) = img(1, 0, 2) = 128;
  img(2, 0, 1) = 255;
  const ImageHSV8 hsv = rgb_to_hsv(img);
  CHECK(hsv(0, 0, 0) == 0);
  CHECK(hsv(0, 0, 1) == 0);
  CHECK(hsv(0, 0, 2) == 0);
  CHECK(hsv(1, 0, 0) == 0);
  CHECK(hsv(1, 0, 1) == 0);
  CHECK(hsv(1, 0, 2) == 128);
  CHECK(hsv(2, 0, 0) == 85);
  CHECK(hsv(2, 0, 1) == 255);
  CHECK(hsv(2, 0, 2) == 255);
}

TEST_CASE("rgb_to_hsv agrees with the float conversion") {
  const ImageRGB8 img = random_rgb(256, 256, 11);
  const ImageHSV8 hsv = rgb_to_hsv(img);
  int mismatches = 0;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const auto want = oracle::hsv(img(x, y, 0), img(x, y, 1), img(x, y, 2));
      for (std::size_t c = 0; c < 3; ++c) mismatches += hsv(x, y, c) != want[c];
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("achromatic pixels have zero saturation") {
  ImageRGB8 img(256, 1);
  for (int i = 0; i < 256; ++i) img(i, 0, 0) = img(i, 0, 1) = img(i, 0, 2) = static_cast<std::uint8_t>(i);
  const ImageHSV8 hsv = rgb_to_hsv(img);
  for (int i = 0; i < 256; ++i) {
    CHECK(hsv(i, 0, 1) == 0);
    CHECK(hsv(i, 0, 2) == i);
  }
}

TEST_CASE("gaussian blur") {
  SUBCASE("constant image is a fixed point") {
    ImageGray8 img(31, 17, 93);
    for (double s : {0.5, 1.0, 1.4, 3.0}) CHECK(gaussian_blur(img, s) == img);
  }
  SUBCASE("sigma zero is the identity") {
    const ImageRGB8 img = random_rgb(20, 10, 3);
    CHECK(gaussian_blur(img, 0.0) == img);
  }
  SUBCASE("impulse centre equals 255 k0 squared") {
    ImageGray8 img(21, 21);
    img(10, 10) = 255;
    const auto k = gaussian_kernel(1.0);
    REQUIRE(k.size() == 7);
    const ImageGray8 out = gaussian_blur(img, 1.0);
    CHECK(out(10, 10) == static_cast<int>(std::floor(255.0 * k[3] * k[3] + 0.5)));
  }
  SUBCASE("separable result matches the dense 2-D convolution") {
    const ImageRGB8 rgb = random_rgb(40, 30, 5);
    for (double s : {0.6, 1.0, 1.4}) {
      const ImageRGB8 got = gaussian_blur(rgb, s);
      const ImageRGB8 want = oracle::dense_gaussian(rgb, s);
      int worst = 0;
      for (std::size_t i = 0; i < got.data().size(); ++i) worst = std::max(worst, std::abs(got.data()[i] - want.data()[i]));
      CHECK(worst <= 1);
    }
  }
  SUBCASE("negative sigma is rejected") { CHECK_THROWS_AS(gaussian_blur(ImageGray8(2, 2), -1.0), std::invalid_argument); }
}

TEST_CASE("segment") {
  ImageHSV8 img(8, 8);
  for (std::size_t i = 0; i < img.data().size(); i += 3) {
    img.data()[i] = 100;
    img.data()[i + 1] = 200;
    img.data()[i + 2] = 200;
  }
  CHECK(count_white(segment(img, {80, 120, 100, 255, 100, 255})) == 64);
  CHECK(count_white(segment(img, {120, 160, 100, 255, 100, 255})) == 0);

  SUBCASE("bounds are exclusive") {
    CHECK(count_white(segment(img, {100, 120, 100, 255, 100, 255})) == 0);
    CHECK(count_white(segment(img, {80, 100, 100, 255, 100, 255})) == 0);
    CHECK(count_white(segment(img, {80, 120, 100, 200, 100, 255})) == 0);
  }
  SUBCASE("hue interval wraps through zero") {
    for (std::size_t i = 0; i < img.data().size(); i += 3) img.data()[i] = 3;
    CHECK(count_white(segment(img, {250, 10, 100, 255, 100, 255})) == 64);
    CHECK(count_white(segment(img, {10, 250, 100, 255, 100, 255})) == 0);
  }
  SUBCASE("invalid thresholds") {
    CHECK_THROWS_AS(segment(img, {0, 10, 200, 100, 0, 255}), std::invalid_argument);
    CHECK_THROWS_AS(segment(img, {0, 300, 0, 255, 0, 255}), std::invalid_argument);
  }
}

TEST_CASE("segment recovers a synthetic disk exactly") {
  ImageRGB8 rgb(640, 480);
  const BinaryMask disk = disk_mask(640, 480, 320, 240, 20);
  for (int y = 0; y < 480; ++y)
    for (int x = 0; x < 640; ++x)
      if (disk(x, y)) rgb(x, y, 0) = 40, rgb(x, y, 1) = 200, rgb(x, y, 2) = 60;
  const BinaryMask got = segment(rgb_to_hsv(rgb), {70, 110, 100, 255, 100, 255});
  CHECK(got == disk);
}

TEST_CASE("segment properties") {
  std::mt19937_64 rng(21);
  const ImageRGB8 rgb = random_rgb(64, 48, 8);
  const ImageHSV8 hsv = rgb_to_hsv(rgb);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    HsvThresholds t{pick(0, 255), pick(0, 255), pick(0, 120), pick(130, 255), pick(0, 120), pick(130, 255)};
    const BinaryMask m = segment(hsv, t);
    for (auto v : m.data()) REQUIRE((v == 0 || v == 255));

    // Widening every interval never loses a pixel.
    HsvThresholds wide = t;
    wide.sat_lo = std::max(0, t.sat_lo - pick(0, 30));
    wide.val_hi = std::min(255, t.val_hi + pick(0, 30));
    if (t.hue_lo <= t.hue_hi) wide.hue_lo = std::max(0, t.hue_lo - pick(0, 20));
    const BinaryMask mw = segment(hsv, wide);
    for (std::size_t i = 0; i < m.data().size(); ++i) REQUIRE((m.data()[i] == 0 || mw.data()[i] == 255));
  }

  // Row permutation commutes with segmentation.
  ImageHSV8 flipped(hsv.width(), hsv.height());
  for (int y = 0; y < hsv.height(); ++y)
    for (int x = 0; x < hsv.width(); ++x)
      for (std::size_t c = 0; c < 3; ++c) flipped(x, hsv.height() - 1 - y, c) = hsv(x, y, c);
  const HsvThresholds t{30, 200, 40, 250, 40, 250};
  const BinaryMask a = segment(hsv, t);
  const BinaryMask b = segment(flipped, t);
  for (int y = 0; y < hsv.height(); ++y)
    for (int x = 0; x < hsv.width(); ++x) REQUIRE(a(x, y) == b(x, hsv.height() - 1 - y));
}

TEST_CASE("pyramid scrub") {
  SUBCASE("black stays black") { CHECK(count_white(pyramid_scrub(BinaryMask(16, 16))) == 0); }
  SUBCASE("isolated pixel disappears") {
    BinaryMask m(16, 16);
    m(7, 9) = kWhite;
    CHECK(count_white(pyramid_scrub(m)) == 0);
  }
  SUBCASE("12x12 block loses at most a 2-pixel ring") {
    for (int ox = 0; ox < 2; ++ox) {
      for (int oy = 0; oy < 2; ++oy) {
        BinaryMask m(32, 32);
        for (int y = 0; y < 12; ++y)
          for (int x = 0; x < 12; ++x) m(5 + ox + x, 6 + oy + y) = kWhite;
        const auto n = static_cast<long>(count_white(pyramid_scrub(m)));
        CHECK(std::abs(n - 144) <= 144 - 10 * 10);
      }
    }
  }
  SUBCASE("idempotent on aligned 2x2 blocks") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
      BinaryMask m(33, 27);
      for (int by = 0; by < 14; ++by)
        for (int bx = 0; bx < 17; ++bx)
          if (rng() % 3 == 0)
            for (int dy = 0; dy < 2; ++dy)
              for (int dx = 0; dx < 2; ++dx)
                if (m.contains(2 * bx + dx, 2 * by + dy)) m(2 * bx + dx, 2 * by + dy) = kWhite;
      const BinaryMask once = pyramid_scrub(m);
      CHECK(pyramid_scrub(once) == once);
    }
  }
  SUBCASE("odd sizes are preserved") {
    BinaryMask m(7, 5, kWhite);
    const BinaryMask s = pyramid_scrub(m);
    CHECK(s.width() == 7);
    CHECK(s.height() == 5);
    // The last column and row pair with missing (black) pixels.
    CHECK(s(6, 0) == 0);
    CHECK(s(0, 4) == 0);
    CHECK(s(5, 3) == kWhite);
  }
}

TEST_CASE("centroid") {
  BinaryMask one(10, 10);
  one(5, 7) = kWhite;
  CHECK(*centroid(one) == Point2{5, 7});
  CHECK_FALSE(centroid(BinaryMask(4, 4)).has_value());

  const auto c = centroid(disk_mask(120, 120, 50, 60, 9));
  REQUIRE(c);
  CHECK(std::abs(c->x - 50) <= 0.5);
  CHECK(std::abs(c->y - 60) <= 0.5);

  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    BinaryMask m(20, 20);
    int x0 = 20, x1 = -1, y0 = 20, y1 = -1;
    for (int k = 0; k < 6; ++k) {
      const int x = static_cast<int>(rng() % 20), y = static_cast<int>(rng() % 20);
      m(x, y) = kWhite;
      x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
    const auto p = centroid(m);
    REQUIRE(p);
    CHECK(p->x >= x0);
    CHECK(p->x <= x1);
    CHECK(p->y >= y0);
    CHECK(p->y <= y1);
  }
}

TEST_CASE("convex hull") {
  SUBCASE("triangle") {
    const std::vector<Point2> pts{{0, 0}, {4, 1}, {1, 5}};
    CHECK(convex_hull(pts).size() == 3);
  }
  SUBCASE("square with interior points") {
    std::vector<Point2> pts{{0, 0}, {10, 0}, {10, 10}, {0, 10}};
    for (int i = 1; i <= 10; ++i) pts.push_back({i * 0.9, 10 - i * 0.8});
    const auto h = convex_hull(pts);
    CHECK(h == std::vector<Point2>{{0, 0}, {10, 0}, {10, 10}, {0, 10}});
  }
  SUBCASE("collinear points give the endpoints") {
    const std::vector<Point2> pts{{2, 2}, {0, 0}, {4, 4}, {1, 1}, {3, 3}};
    CHECK(convex_hull(pts) == std::vector<Point2>{{0, 0}, {4, 4}});
  }
  SUBCASE("fewer than three distinct points") {
    const std::vector<Point2> pts{{3, 1}, {3, 1}, {1, 0}};
    CHECK(convex_hull(pts) == std::vector<Point2>{{1, 0}, {3, 1}});
  }
  SUBCASE("matches the brute-force hull") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 2000; ++trial) {
      const std::size_t n = 1 + rng() % 12;
      std::vector<Point2> pts;
      for (std::size_t i = 0; i < n; ++i) pts.push_back({double(rng() % 8), double(rng() % 8)});
      const auto got = convex_hull(pts);
      const auto want = oracle::brute_hull(pts);
      REQUIRE(got == want);
    }
  }
}

TEST_CASE("mask hull uses row extremes") {
  const BinaryMask m = disk_mask(40, 40, 20, 20, 6);
  std::vector<Point2> all;
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x)
      if (m(x, y)) all.push_back({double(x), double(y)});
  CHECK(mask_hull(m) == convex_hull(all));
}

TEST_CASE("dilate") {
  BinaryMask m(9, 9);
  m(4, 4) = kWhite;
  CHECK(count_white(dilate(m, 2)) == 25);
  CHECK(dilate(m, 0) == m);
  m(0, 0) = kWhite;
  CHECK(count_white(dilate(m, 1)) == 9 + 4);
}

TEST_CASE("suggest thresholds isolate a saturated blob") {
  ImageRGB8 img(120, 90, 20);
  const BinaryMask disk = disk_mask(120, 90, 60, 45, 10);
  for (int y = 0; y < 90; ++y)
    for (int x = 0; x < 120; ++x)
      if (disk(x, y)) img(x, y, 0) = 230, img(x, y, 1) = 40, img(x, y, 2) = 60;
  const auto t = suggest_thresholds(img);
  REQUIRE(t);
  CHECK(segment(rgb_to_hsv(img), *t) == disk);
  CHECK_FALSE(suggest_thresholds(ImageRGB8(50, 50, 128)).has_value());
}

TEST_CASE("PPM and PGM round trip") {
  const ImageRGB8 img = random_rgb(13, 7, 1);
  CHECK(decode_ppm(encode_ppm(img)) == img);
  const auto dir = std::filesystem::temp_directory_path() / "vip_io_test";
  std::filesystem::create_directories(dir);
  write_ppm(dir / "a.ppm", img);
  CHECK(read_ppm(dir / "a.ppm") == img);

  BinaryMask m(5, 4);
  m(1, 2) = kWhite;
  write_pgm(dir / "m.pgm", m);
  CHECK(read_mask_pgm(dir / "m.pgm") == m);

  ImageGray8 g(5, 4, 7);
  write_pgm(dir / "g.pgm", g);
  CHECK(read_pgm(dir / "g.pgm") == g);
  CHECK_THROWS_AS(read_mask_pgm(dir / "g.pgm"), ImageIoError);

  const std::string bytes = encode_ppm(img);
  CHECK_THROWS_AS(decode_ppm(bytes.substr(0, bytes.size() - 5)), ImageIoError);
  CHECK_THROWS_AS(decode_ppm("P3\n1 1\n255\n0 0 0\n"), ImageIoError);
  std::filesystem::remove_all(dir);
}
