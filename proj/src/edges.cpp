#include "vip/edges.hpp"

#include <algorithm>
#include <cmath>

#include "vip/vision.hpp"

namespace vip {
namespace {

using Mat3 = Homography::Matrix;

double det3(const Mat3& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

double max_abs(const Mat3& m) {
  double s = 0.0;
  for (const auto& row : m)
    for (double v : row) s = std::max(s, std::abs(v));
  return s;
}

Mat3 adjugate(const Mat3& m) {
  Mat3 a{};
  a[0][0] = m[1][1] * m[2][2] - m[1][2] * m[2][1];
  a[0][1] = m[0][2] * m[2][1] - m[0][1] * m[2][2];
  a[0][2] = m[0][1] * m[1][2] - m[0][2] * m[1][1];
  a[1][0] = m[1][2] * m[2][0] - m[1][0] * m[2][2];
  a[1][1] = m[0][0] * m[2][2] - m[0][2] * m[2][0];
  a[1][2] = m[0][2] * m[1][0] - m[0][0] * m[1][2];
  a[2][0] = m[1][0] * m[2][1] - m[1][1] * m[2][0];
  a[2][1] = m[0][1] * m[2][0] - m[0][0] * m[2][1];
  a[2][2] = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  return a;
}

Point2 project(const Mat3& m, Point2 p) {
  const double w = m[2][0] * p.x + m[2][1] * p.y + m[2][2];
  if (std::abs(w) <= 1e-9) throw AtInfinityError("point maps to infinity (|w| <= 1e-9)");
  return {(m[0][0] * p.x + m[0][1] * p.y + m[0][2]) / w, (m[1][0] * p.x + m[1][1] * p.y + m[1][2]) / w};
}

std::uint8_t quantise_direction(float gx, float gy) {
  constexpr float kTan22 = 0.41421356f;
  constexpr float kTan67 = 2.41421356f;
  const float ax = std::abs(gx);
  const float ay = std::abs(gy);
  if (ay <= ax * kTan22) return 0;
  if (ay >= ax * kTan67) return 2;
  return (gx > 0) == (gy > 0) ? 1 : 3;
}

}  // namespace

void CannyParams::validate() const {
  if (!(low_thresh >= 0.0) || !(low_thresh <= high_thresh)) {
    throw std::invalid_argument("CannyParams: need 0 <= low_thresh <= high_thresh");
  }
  if (!(sigma >= 0.0)) throw std::invalid_argument("CannyParams: sigma must be >= 0");
}

double Quad::signed_area() const {
  double s = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const Point2 a = corners[i];
    const Point2 b = corners[(i + 1) % 4];
    s += a.x * b.y - b.x * a.y;
  }
  return 0.5 * s;
}

Homography::Homography(const Matrix& m) : m_(m) {
  if (std::abs(m_[2][2]) < 1e-300) throw DegenerateQuadError("homography has m[2][2] == 0");
  const double s = m_[2][2];
  for (auto& row : m_)
    for (double& v : row) v /= s;
  const double scale = max_abs(m_);
  if (std::abs(det3(m_)) <= 1e-12 * scale * scale * scale) throw DegenerateQuadError("homography is singular");
}

double Homography::determinant() const noexcept { return det3(m_); }

Homography Homography::inverse() const { return Homography(adjugate(m_)); }

Point2 Homography::apply(Point2 p) const { return project(m_, p); }

std::array<double, 9> Homography::row_major() const {
  return {m_[0][0], m_[0][1], m_[0][2], m_[1][0], m_[1][1], m_[1][2], m_[2][0], m_[2][1], m_[2][2]};
}

GradientField sobel_gradient(const ImageGray8& img) {
  const int w = img.width();
  const int h = img.height();
  GradientField g;
  g.width = w;
  g.height = h;
  g.magnitude.assign(img.pixel_count(), 0.0f);
  g.direction.assign(img.pixel_count(), 0);

  const auto px = [&](int x, int y) -> int {
    return img(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1));
  };
  std::vector<int> gxs(static_cast<std::size_t>(w));
  std::vector<int> gys(static_cast<std::size_t>(w));
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* up = img.at(0, std::max(0, y - 1));
    const std::uint8_t* mid = img.at(0, y);
    const std::uint8_t* down = img.at(0, std::min(h - 1, y + 1));
    int* gx = gxs.data();
    int* gy = gys.data();
    for (int x = 1; x < w - 1; ++x) {
      gx[x] = (up[x + 1] + 2 * mid[x + 1] + down[x + 1]) - (up[x - 1] + 2 * mid[x - 1] + down[x - 1]);
      gy[x] = (down[x - 1] + 2 * down[x] + down[x + 1]) - (up[x - 1] + 2 * up[x] + up[x + 1]);
    }
    for (int x : {0, w - 1}) {
      gx[x] = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1)) -
              (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1));
      gy[x] = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1)) -
              (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1));
    }
    const std::size_t base = static_cast<std::size_t>(y) * static_cast<std::size_t>(w);
    float* mag = g.magnitude.data() + base;
    std::uint8_t* dir = g.direction.data() + base;
    for (int x = 0; x < w; ++x) {
      const auto fx = static_cast<float>(gx[x]);
      const auto fy = static_cast<float>(gy[x]);
      mag[x] = std::sqrt(fx * fx + fy * fy);
      dir[x] = quantise_direction(fx, fy);
    }
  }
  return g;
}

std::vector<float> non_max_suppress(const GradientField& g) {
  static constexpr int kStep[4][2] = {{1, 0}, {1, 1}, {0, 1}, {1, -1}};
  const int w = g.width;
  const int h = g.height;
  std::vector<float> out(g.magnitude.size(), 0.0f);
  const auto mag = [&](int x, int y) -> float {
    if (x < 0 || y < 0 || x >= w || y >= h) return 0.0f;
    return g.magnitude[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)];
  };
  const auto visit = [&](int x, int y) {
    const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
    const float m = g.magnitude[i];
    if (m <= 0.0f) return;
    const int dx = kStep[g.direction[i]][0];
    const int dy = kStep[g.direction[i]][1];
    const float ahead = mag(x + dx, y + dy);
    const float behind = mag(x - dx, y - dy);
    // Asymmetric comparison: of two tied neighbours exactly one survives.
    if (m >= ahead && m > behind) out[i] = m;
  };
  // Interior pixels index their neighbours directly.
  const std::ptrdiff_t offset[4] = {1, w + 1, w, 1 - static_cast<std::ptrdiff_t>(w)};
  for (int y = 0; y < h; ++y) {
    if (y == 0 || y == h - 1 || w < 3) {
      for (int x = 0; x < w; ++x) visit(x, y);
      continue;
    }
    visit(0, y);
    const std::size_t base = static_cast<std::size_t>(y) * static_cast<std::size_t>(w);
    const float* m = g.magnitude.data() + base;
    const std::uint8_t* d = g.direction.data() + base;
    float* o = out.data() + base;
    for (int x = 1; x < w - 1; ++x) {
      if (m[x] <= 0.0f) continue;
      const std::ptrdiff_t k = offset[d[x]];
      if (m[x] >= m[x + k] && m[x] > m[x - k]) o[x] = m[x];
    }
    visit(w - 1, y);
  }
  return out;
}

EdgeMap hysteresis(std::span<const float> magnitude, int width, int height, double low, double high) {
  EdgeMap out(width, height);
  auto dst = out.data();
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < magnitude.size(); ++i) {
    if (magnitude[i] > high && dst[i] == 0) {
      dst[i] = kWhite;
      stack.push_back(i);
    }
  }
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    const int x = static_cast<int>(i % static_cast<std::size_t>(width));
    const int y = static_cast<int>(i / static_cast<std::size_t>(width));
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx;
        const int ny = y + dy;
        if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
        const std::size_t j =
            static_cast<std::size_t>(ny) * static_cast<std::size_t>(width) + static_cast<std::size_t>(nx);
        if (dst[j] == 0 && magnitude[j] > low) {
          dst[j] = kWhite;
          stack.push_back(j);
        }
      }
    }
  }
  return out;
}

EdgeMap canny(const ImageGray8& img, const CannyParams& p) {
  p.validate();
  const GradientField g = sobel_gradient(p.sigma > 0.0 ? gaussian_blur(img, p.sigma) : img);
  const std::vector<float> thin = non_max_suppress(g);
  return hysteresis(thin, g.width, g.height, p.low_thresh, p.high_thresh);
}

void suppress_edges(EdgeMap& edges, const BinaryMask& mask) {
  auto e = edges.data();
  const auto m = mask.data();
  for (std::size_t i = 0; i < e.size() && i < m.size(); ++i) {
    if (m[i] == kWhite) e[i] = 0;
  }
}

Quad order_corners(std::array<Point2, 4> pts) {
  Point2 c{};
  for (const Point2& p : pts) {
    c.x += p.x / 4.0;
    c.y += p.y / 4.0;
  }
  std::sort(pts.begin(), pts.end(), [c](Point2 a, Point2 b) {
    return std::atan2(a.y - c.y, a.x - c.x) < std::atan2(b.y - c.y, b.x - c.x);
  });
  const auto first =
      std::min_element(pts.begin(), pts.end(), [](Point2 a, Point2 b) { return a.x + a.y < b.x + b.y; });
  std::rotate(pts.begin(), first, pts.end());
  return Quad{pts};
}

std::optional<Quad> extract_quad(const EdgeMap& edges) {
  const std::vector<Point2> hull = mask_hull(edges);
  if (hull.size() < 4) return std::nullopt;

  // Exterior turn at each hull vertex. Rasterised edges leave short 45-degree
  // staircases whose pixels tie on a diagonal score; the true corner is the
  // tied vertex where the outline turns most.
  const std::size_t n = hull.size();
  std::vector<double> turn(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = hull[(i + n - 1) % n];
    const Point2 b = hull[i];
    const Point2 c = hull[(i + 1) % n];
    const double ux = b.x - a.x, uy = b.y - a.y, vx = c.x - b.x, vy = c.y - b.y;
    turn[i] = std::abs(std::atan2(ux * vy - uy * vx, ux * vx + uy * vy));
  }

  // TL, TR, BR, BL diagonals. Among equally sharp tied vertices the one
  // further along the next diagonal wins, so a 45-degree square still yields
  // four distinct corners.
  static constexpr double kDir[4][2] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
  std::array<Point2, 4> picked{};
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& d = kDir[k];
    const auto& next = kDir[(k + 1) % 4];
    const auto score = [&](Point2 p) { return d[0] * p.x + d[1] * p.y; };
    const auto along = [&](Point2 p) { return next[0] * p.x + next[1] * p.y; };
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
      const double s = score(hull[i]);
      const double sb = score(hull[best]);
      if (s > sb + 1e-9) {
        best = i;
      } else if (std::abs(s - sb) <= 1e-9) {
        if (turn[i] > turn[best] + 1e-6 ||
            (std::abs(turn[i] - turn[best]) <= 1e-6 && along(hull[i]) > along(hull[best]))) {
          best = i;
        }
      }
    }
    picked[k] = hull[best];
  }
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = i + 1; j < 4; ++j) {
      if (picked[i] == picked[j]) return std::nullopt;
    }
  }
  Quad q = order_corners(picked);
  if (q.signed_area() < kMinQuadArea) return std::nullopt;
  return q;
}

bool solve_linear(std::array<std::array<double, 8>, 8>& a, std::array<double, 8>& b, double tol) {
  double scale = 0.0;
  for (const auto& row : a)
    for (double v : row) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return false;

  for (std::size_t col = 0; col < 8; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < 8; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) <= tol * scale) return false;
    std::swap(a[pivot], a[col]);
    std::swap(b[pivot], b[col]);
    for (std::size_t r = col + 1; r < 8; ++r) {
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < 8; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t i = 8; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < 8; ++c) s -= a[i][c] * b[c];
    b[i] = s / a[i][i];
  }
  return true;
}

Homography homography_from_quad(const Quad& q) {
  static constexpr Point2 kModel[4] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};

  double extent = 0.0;
  for (const Point2& a : q.corners)
    for (const Point2& b : q.corners) extent = std::max(extent, distance(a, b));
  if (extent == 0.0) throw DegenerateQuadError("quad corners coincide");
  for (std::size_t skip = 0; skip < 4; ++skip) {
    std::array<Point2, 3> tri{};
    for (std::size_t i = 0, k = 0; i < 4; ++i)
      if (i != skip) tri[k++] = q.corners[i];
    if (std::abs(cross(tri[0], tri[1], tri[2])) <= 1e-9 * extent * extent) {
      throw DegenerateQuadError("three quad corners are collinear");
    }
  }

  std::array<std::array<double, 8>, 8> a{};
  std::array<double, 8> b{};
  for (std::size_t i = 0; i < 4; ++i) {
    const double u = kModel[i].x;
    const double v = kModel[i].y;
    const double x = q.corners[i].x;
    const double y = q.corners[i].y;
    a[2 * i] = {u, v, 1, 0, 0, 0, -u * x, -v * x};
    b[2 * i] = x;
    a[2 * i + 1] = {0, 0, 0, u, v, 1, -u * y, -v * y};
    b[2 * i + 1] = y;
  }
  if (!solve_linear(a, b)) throw DegenerateQuadError("homography system is singular");
  return Homography(Mat3{{{b[0], b[1], b[2]}, {b[3], b[4], b[5]}, {b[6], b[7], 1.0}}});
}

Point2 warp_point(const Homography& h, Point2 p) { return h.apply(p); }

Point2 inverse_warp(const Homography& h, Point2 p) {
  Mat3 inv = adjugate(h.matrix());
  const double det = h.determinant();
  for (auto& row : inv)
    for (double& v : row) v /= det;
  return project(inv, p);
}

}  // namespace vip
