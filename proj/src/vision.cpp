#include "vip/vision.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace vip {
namespace {

bool byte_range(int v) { return v >= 0 && v <= 255; }

// Round half up; same as lround for the non-negative range that matters.
std::uint8_t clamp_round(float v) {
  v = std::min(std::max(v, 0.0f), 255.0f);
  return static_cast<std::uint8_t>(v + 0.5f);
}

template <std::size_t C, class Tag>
Raster<C, Tag> blur_impl(const Raster<C, Tag>& img, double sigma) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("gaussian_blur: sigma must be >= 0");
  if (sigma == 0.0) return img;

  const std::vector<double> k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int w = img.width();
  const int h = img.height();
  const auto src = img.data();

  const std::size_t stride = static_cast<std::size_t>(w) * C;

  // Symmetric taps are folded: k[r - i] == k[r + i].
  std::vector<float> kf(static_cast<std::size_t>(r) + 1);
  for (int i = 0; i <= r; ++i) kf[static_cast<std::size_t>(i)] = static_cast<float>(k[static_cast<std::size_t>(r + i)]);

  // Horizontal pass over a row copy padded by r clamped pixels each side.
  std::vector<float> tmp(src.size());
  std::vector<float> pad((static_cast<std::size_t>(w) + 2 * static_cast<std::size_t>(r)) * C);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* in = src.data() + static_cast<std::size_t>(y) * stride;
    for (int x = -r; x < w + r; ++x) {
      const std::uint8_t* p = in + static_cast<std::size_t>(std::clamp(x, 0, w - 1)) * C;
      for (std::size_t c = 0; c < C; ++c) pad[static_cast<std::size_t>(x + r) * C + c] = p[c];
    }
    float* row = tmp.data() + static_cast<std::size_t>(y) * stride;
    const float* centre = pad.data() + static_cast<std::size_t>(r) * C;
    for (std::size_t j = 0; j < stride; ++j) row[j] = kf[0] * centre[j];
    for (std::size_t i = 1; i < kf.size(); ++i) {
      const float kv = kf[i];
      const float* lo = centre - i * C;
      const float* hi = centre + i * C;
      for (std::size_t j = 0; j < stride; ++j) row[j] += kv * (lo[j] + hi[j]);
    }
  }

  Raster<C, Tag> out(w, h);
  auto dst = out.data();
  std::vector<float> acc(stride);
  const auto tmp_row = [&](int y) { return tmp.data() + static_cast<std::size_t>(std::clamp(y, 0, h - 1)) * stride; };
  for (int y = 0; y < h; ++y) {
    const float* mid = tmp_row(y);
    for (std::size_t j = 0; j < stride; ++j) acc[j] = kf[0] * mid[j];
    for (int i = 1; i <= r; ++i) {
      const float kv = kf[static_cast<std::size_t>(i)];
      const float* above = tmp_row(y - i);
      const float* below = tmp_row(y + i);
      for (std::size_t j = 0; j < stride; ++j) acc[j] += kv * (above[j] + below[j]);
    }
    std::uint8_t* out_row = dst.data() + static_cast<std::size_t>(y) * stride;
    for (std::size_t j = 0; j < stride; ++j) out_row[j] = clamp_round(acc[j]);
  }
  return out;
}

int circular_offset(int from, int to) {
  int d = (to - from) & 0xFF;
  return d >= 128 ? d - 256 : d;
}

}  // namespace

void HsvThresholds::validate() const {
  for (int v : {hue_lo, hue_hi, sat_lo, sat_hi, val_lo, val_hi}) {
    if (!byte_range(v)) throw std::invalid_argument("HsvThresholds: bounds must lie in [0,255]");
  }
  if (sat_lo >= sat_hi) throw std::invalid_argument("HsvThresholds: sat_lo must be < sat_hi");
  if (val_lo >= val_hi) throw std::invalid_argument("HsvThresholds: val_lo must be < val_hi");
}

ImageHSV8 rgb_to_hsv(const ImageRGB8& img) {
  ImageHSV8 out(img.width(), img.height());
  const auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); i += 3) {
    const int r = src[i];
    const int g = src[i + 1];
    const int b = src[i + 2];
    const int mx = std::max({r, g, b});
    const int mn = std::min({r, g, b});
    const int delta = mx - mn;

    int hue = 0;
    if (delta > 0) {
      // Position on the hue circle in units of delta, in [0, 6*delta).
      int n = 0;
      if (mx == r) {
        n = g - b;
        if (n < 0) n += 6 * delta;
      } else if (mx == g) {
        n = b - r + 2 * delta;
      } else {
        n = r - g + 4 * delta;
      }
      hue = (n * 256) / (6 * delta);
    }
    dst[i] = static_cast<std::uint8_t>(hue & 0xFF);
    dst[i + 1] = mx == 0 ? 0 : static_cast<std::uint8_t>((255 * delta + mx / 2) / mx);
    dst[i + 2] = static_cast<std::uint8_t>(mx);
  }
  return out;
}

ImageGray8 rgb_to_gray(const ImageRGB8& img) {
  ImageGray8 out(img.width(), img.height());
  const auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0, j = 0; j < dst.size(); i += 3, ++j) {
    // BT.601 weights in 8.8 fixed point.
    dst[j] = static_cast<std::uint8_t>((77 * src[i] + 150 * src[i + 1] + 29 * src[i + 2] + 128) >> 8);
  }
  return out;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_kernel: sigma must be > 0");
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + r)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

ImageGray8 gaussian_blur(const ImageGray8& img, double sigma) { return blur_impl(img, sigma); }
ImageRGB8 gaussian_blur(const ImageRGB8& img, double sigma) { return blur_impl(img, sigma); }

bool in_range(std::uint8_t h, std::uint8_t s, std::uint8_t v, const HsvThresholds& t) noexcept {
  const bool hue_ok = t.hue_lo <= t.hue_hi ? (h > t.hue_lo && h < t.hue_hi) : (h > t.hue_lo || h < t.hue_hi);
  return hue_ok && s > t.sat_lo && s < t.sat_hi && v > t.val_lo && v < t.val_hi;
}

BinaryMask segment(const ImageHSV8& img, const HsvThresholds& t) {
  t.validate();
  BinaryMask out(img.width(), img.height());
  const auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0, j = 0; j < dst.size(); i += 3, ++j) {
    dst[j] = in_range(src[i], src[i + 1], src[i + 2], t) ? kWhite : 0;
  }
  return out;
}

BinaryMask pyramid_scrub(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  const int dw = (w + 1) / 2;
  const int dh = (h + 1) / 2;
  std::vector<std::uint8_t> down(static_cast<std::size_t>(dw) * static_cast<std::size_t>(dh), 0);
  for (int by = 0; by < dh; ++by) {
    for (int bx = 0; bx < dw; ++bx) {
      int whites = 0;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const int x = 2 * bx + dx;
          const int y = 2 * by + dy;
          // Pixels past an odd border count as black.
          if (x < w && y < h && mask(x, y) == kWhite) ++whites;
        }
      }
      down[static_cast<std::size_t>(by) * static_cast<std::size_t>(dw) + static_cast<std::size_t>(bx)] =
          whites >= 3 ? kWhite : 0;
    }
  }
  BinaryMask out(w, h);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* src_row = down.data() + static_cast<std::size_t>(y / 2) * static_cast<std::size_t>(dw);
    std::uint8_t* dst_row = out.at(0, y);
    for (int x = 0; x < w; ++x) dst_row[x] = src_row[x / 2];
  }
  return out;
}

BinaryMask dilate(const BinaryMask& mask, int radius) {
  if (radius <= 0) return mask;
  const int w = mask.width();
  const int h = mask.height();
  BinaryMask rows(w, h);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* src = mask.at(0, y);
    std::uint8_t* dst = rows.at(0, y);
    for (int x = 0; x < w; ++x) {
      if (src[x] != kWhite) continue;
      std::fill(dst + std::max(0, x - radius), dst + std::min(w, x + radius + 1), kWhite);
    }
  }
  BinaryMask out(w, h);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* src = rows.at(0, y);
    for (int x = 0; x < w; ++x) {
      if (src[x] != kWhite) continue;
      for (int yy = std::max(0, y - radius); yy <= std::min(h - 1, y + radius); ++yy) out(x, yy) = kWhite;
    }
  }
  return out;
}

std::optional<Point2> centroid(const BinaryMask& mask) {
  std::int64_t sx = 0;
  std::int64_t sy = 0;
  std::int64_t n = 0;
  for (int y = 0; y < mask.height(); ++y) {
    const std::uint8_t* row = mask.at(0, y);
    for (int x = 0; x < mask.width(); ++x) {
      if (row[x] == kWhite) {
        sx += x;
        sy += y;
        ++n;
      }
    }
  }
  if (n == 0) return std::nullopt;
  return Point2{static_cast<double>(sx) / static_cast<double>(n), static_cast<double>(sy) / static_cast<double>(n)};
}

std::vector<Point2> convex_hull(std::span<const Point2> points) {
  std::vector<Point2> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  const auto lowest_first = [](Point2 a, Point2 b) { return a.y < b.y || (a.y == b.y && a.x < b.x); };
  if (pts.size() < 3) {
    std::sort(pts.begin(), pts.end(), lowest_first);
    return pts;
  }

  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Point2& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);

  const auto first = std::min_element(hull.begin(), hull.end(), lowest_first);
  std::rotate(hull.begin(), first, hull.end());
  return hull;
}

template <class Tag>
std::vector<Point2> mask_hull(const Raster<1, Tag>& mask) {
  std::vector<Point2> extremes;
  for (int y = 0; y < mask.height(); ++y) {
    const std::uint8_t* row = mask.at(0, y);
    int left = -1;
    int right = -1;
    for (int x = 0; x < mask.width(); ++x) {
      if (row[x] == kWhite) {
        if (left < 0) left = x;
        right = x;
      }
    }
    if (left < 0) continue;
    extremes.push_back({static_cast<double>(left), static_cast<double>(y)});
    if (right != left) extremes.push_back({static_cast<double>(right), static_cast<double>(y)});
  }
  return convex_hull(extremes);
}
template std::vector<Point2> mask_hull(const BinaryMask&);
template std::vector<Point2> mask_hull(const EdgeMap&);

std::optional<HsvThresholds> suggest_thresholds(const ImageRGB8& img) {
  constexpr int kMinChroma = 64;
  constexpr int kClusterReach = 20;
  constexpr int kHueMargin = 6;
  constexpr int kSatValMargin = 20;
  constexpr std::size_t kMinPixels = 10;

  const ImageHSV8 hsv = rgb_to_hsv(img);
  const auto px = hsv.data();

  std::array<std::size_t, 256> hist{};
  std::size_t candidates = 0;
  for (std::size_t i = 0; i < px.size(); i += 3) {
    if (px[i + 1] >= kMinChroma && px[i + 2] >= kMinChroma) {
      ++hist[px[i]];
      ++candidates;
    }
  }
  if (candidates < kMinPixels) return std::nullopt;

  int peak = 0;
  std::size_t best = 0;
  for (int h = 0; h < 256; ++h) {
    std::size_t window = 0;
    for (int d = -4; d <= 4; ++d) window += hist[static_cast<std::size_t>((h + d) & 0xFF)];
    if (window > best) {
      best = window;
      peak = h;
    }
  }

  int lo_off = 0;
  int hi_off = 0;
  int min_s = 255;
  int min_v = 255;
  for (std::size_t i = 0; i < px.size(); i += 3) {
    if (px[i + 1] < kMinChroma || px[i + 2] < kMinChroma) continue;
    const int off = circular_offset(peak, px[i]);
    if (std::abs(off) > kClusterReach) continue;
    lo_off = std::min(lo_off, off);
    hi_off = std::max(hi_off, off);
    min_s = std::min<int>(min_s, px[i + 1]);
    min_v = std::min<int>(min_v, px[i + 2]);
  }

  HsvThresholds t;
  t.hue_lo = (peak + lo_off - kHueMargin) & 0xFF;
  t.hue_hi = (peak + hi_off + kHueMargin) & 0xFF;
  t.sat_lo = std::max(0, min_s - kSatValMargin);
  t.sat_hi = 255;
  t.val_lo = std::max(0, min_v - kSatValMargin);
  t.val_hi = 255;
  return t;
}

}  // namespace vip
