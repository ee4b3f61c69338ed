#pragma once

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "vip/geometry.hpp"
#include "vip/image.hpp"

namespace vip {

/// Thresholds are in Sobel-magnitude units (L2 of the 3x3 responses).
struct CannyParams {
  double low_thresh = 30.0;
  double high_thresh = 90.0;
  double sigma = 0.8;

  void validate() const;
};

/// Display-object corners in TL, TR, BR, BL order (positive orientation
/// under cross() in image coordinates).
struct Quad {
  std::array<Point2, 4> corners{};

  Point2 tl() const { return corners[0]; }
  Point2 tr() const { return corners[1]; }
  Point2 br() const { return corners[2]; }
  Point2 bl() const { return corners[3]; }

  /// Shoelace area; positive for a correctly ordered quad.
  double signed_area() const;

  bool operator==(const Quad&) const = default;
};

class DegenerateQuadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AtInfinityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 3x3 projective map with m[2][2] == 1.
class Homography {
 public:
  using Matrix = std::array<std::array<double, 3>, 3>;

  Homography() : Homography(identity()) {}
  /// Normalises so m[2][2] == 1. Throws DegenerateQuadError when the
  /// matrix is singular or m[2][2] is zero.
  explicit Homography(const Matrix& m);

  static Matrix identity() { return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}; }

  const Matrix& matrix() const noexcept { return m_; }
  double determinant() const noexcept;
  Homography inverse() const;

  /// Throws AtInfinityError when |w| <= 1e-9.
  Point2 apply(Point2 p) const;

  /// Nine values, row-major.
  std::array<double, 9> row_major() const;

  bool operator==(const Homography&) const = default;

 private:
  Matrix m_{};
};

/// Gradient stage output, exposed so hysteresis can be exercised alone.
struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<float> magnitude;
  /// 0: horizontal gradient, 1: 45 deg, 2: vertical, 3: 135 deg.
  std::vector<std::uint8_t> direction;
};

GradientField sobel_gradient(const ImageGray8& img);

/// Thins the magnitude to ridge pixels along the quantised gradient
/// direction. Of two tied neighbours along the gradient exactly one stays.
std::vector<float> non_max_suppress(const GradientField& g);

/// Pixels > high are edges; pixels in (low, high] join when 8-connected to
/// an edge pixel, transitively.
EdgeMap hysteresis(std::span<const float> magnitude, int width, int height, double low, double high);

EdgeMap canny(const ImageGray8& img, const CannyParams& p);

/// Clears edge pixels wherever the mask is white.
void suppress_edges(EdgeMap& edges, const BinaryMask& mask);

inline constexpr double kMinQuadArea = 64.0;

/// Hull of the edge pixels; corners are the hull vertices extremal along
/// the four image diagonals. Returns nothing for fewer than four hull
/// vertices or an area below kMinQuadArea.
std::optional<Quad> extract_quad(const EdgeMap& edges);

/// Orders four points TL, TR, BR, BL: sort by angle about their mean, then
/// rotate so the smallest x+y comes first.
Quad order_corners(std::array<Point2, 4> pts);

/// Exact 4-point solve mapping (0,0),(1,0),(1,1),(0,1) to TL,TR,BR,BL.
Homography homography_from_quad(const Quad& q);

Point2 warp_point(const Homography& h, Point2 p);
Point2 inverse_warp(const Homography& h, Point2 p);

/// Solves A x = b in place by Gaussian elimination with partial pivoting.
/// Returns false when a pivot falls below tol times the largest |A_ij|.
bool solve_linear(std::array<std::array<double, 8>, 8>& a, std::array<double, 8>& b, double tol = 1e-12);

}  // namespace vip
