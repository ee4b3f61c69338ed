#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vip/geometry.hpp"
#include "vip/image.hpp"

namespace vip {

/// Open intervals on each HSV channel. A hue pair with lo > hi wraps
/// through 0 (needed for reds).
struct HsvThresholds {
  int hue_lo = 0;
  int hue_hi = 255;
  int sat_lo = 0;
  int sat_hi = 255;
  int val_lo = 0;
  int val_hi = 255;

  /// Throws std::invalid_argument when a bound is outside [0,255] or the
  /// saturation/value pairs are not strictly increasing.
  void validate() const;

  bool operator==(const HsvThresholds&) const = default;
};

ImageHSV8 rgb_to_hsv(const ImageRGB8& img);
ImageGray8 rgb_to_gray(const ImageRGB8& img);

/// Normalised 1-D Gaussian taps, radius ceil(3 sigma). sigma must be > 0.
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian with clamp-to-border. sigma == 0 is the identity.
ImageGray8 gaussian_blur(const ImageGray8& img, double sigma);
ImageRGB8 gaussian_blur(const ImageRGB8& img, double sigma);

bool in_range(std::uint8_t h, std::uint8_t s, std::uint8_t v, const HsvThresholds& t) noexcept;

BinaryMask segment(const ImageHSV8& img, const HsvThresholds& t);

/// 2x majority downsample (a block survives with >= 3 of 4 white) and
/// nearest-neighbour upsample back. Strips speckle; keeps blobs of side >= 4.
BinaryMask pyramid_scrub(const BinaryMask& mask);

/// Square-structuring-element dilation with the given radius.
BinaryMask dilate(const BinaryMask& mask, int radius);

std::optional<Point2> centroid(const BinaryMask& mask);

/// Monotone-chain hull. Vertices have positive orientation under cross()
/// and start at the lowest-y (then lowest-x) point. Collinear points are
/// dropped; fewer than three distinct inputs come back deduplicated.
std::vector<Point2> convex_hull(std::span<const Point2> points);

/// Hull of the white pixels. Only the leftmost and rightmost pixel of each
/// row can be a vertex, so this avoids touching every white pixel twice.
template <class Tag>
std::vector<Point2> mask_hull(const Raster<1, Tag>& mask);

/// Picks thresholds around the dominant saturated hue of a frame. Returns
/// nothing when no pixel is saturated and bright enough to be a marker.
std::optional<HsvThresholds> suggest_thresholds(const ImageRGB8& img);

}  // namespace vip
