#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vip {

/// Row-major 8-bit raster with a fixed channel count. The tag keeps
/// colour spaces and mask kinds from being mixed up at compile time.
template <std::size_t Channels, class Tag>
class Raster {
 public:
  static constexpr std::size_t channels = Channels;

  Raster() = default;
  Raster(int width, int height, std::uint8_t fill = 0) : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw std::invalid_argument("raster dimensions must be >= 1");
    }
    pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * Channels, fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  std::span<std::uint8_t> data() noexcept { return pixels_; }
  std::span<const std::uint8_t> data() const noexcept { return pixels_; }

  std::size_t index(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) *
           Channels;
  }
  std::uint8_t* at(int x, int y) noexcept { return pixels_.data() + index(x, y); }
  const std::uint8_t* at(int x, int y) const noexcept { return pixels_.data() + index(x, y); }

  std::uint8_t& operator()(int x, int y, std::size_t c = 0) noexcept { return pixels_[index(x, y) + c]; }
  std::uint8_t operator()(int x, int y, std::size_t c = 0) const noexcept { return pixels_[index(x, y) + c]; }

  bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  bool operator==(const Raster&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

struct RgbTag {};
struct HsvTag {};
struct GrayTag {};
struct MaskTag {};
struct EdgeTag {};

using ImageRGB8 = Raster<3, RgbTag>;
/// Hue covers the full byte range: 360 degrees map onto 256 steps.
using ImageHSV8 = Raster<3, HsvTag>;
using ImageGray8 = Raster<1, GrayTag>;
/// Pixels are exactly 0 or 255.
using BinaryMask = Raster<1, MaskTag>;
/// Same {0,255} contract as BinaryMask; 255 marks an edge pixel.
using EdgeMap = Raster<1, EdgeTag>;

inline constexpr std::uint8_t kWhite = 255;

/// Counts mask pixels equal to 255.
template <class Tag>
std::size_t count_white(const Raster<1, Tag>& mask) {
  std::size_t n = 0;
  for (auto v : mask.data()) n += (v == kWhite);
  return n;
}

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary PPM (P6) / PGM (P5), maxval 255.
std::string encode_ppm(const ImageRGB8& img);
std::string encode_pgm(std::span<const std::uint8_t> gray, int width, int height);
ImageRGB8 decode_ppm(std::string_view bytes);
ImageGray8 decode_pgm(std::string_view bytes);

void write_ppm(const std::filesystem::path& path, const ImageRGB8& img);
ImageRGB8 read_ppm(const std::filesystem::path& path);

template <class Tag>
void write_pgm(const std::filesystem::path& path, const Raster<1, Tag>& img);
ImageGray8 read_pgm(const std::filesystem::path& path);
/// Reads a PGM and rejects any byte other than 0x00/0xFF.
BinaryMask read_mask_pgm(const std::filesystem::path& path);

}  // namespace vip
