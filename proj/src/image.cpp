#include "vip/image.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace vip {
namespace {

std::string header(char kind, int width, int height) {
  std::ostringstream os;
  os << 'P' << kind << '\n' << width << ' ' << height << "\n255\n";
  return os.str();
}

class NetpbmReader {
 public:
  explicit NetpbmReader(std::string_view bytes) : bytes_(bytes) {}

  char magic() {
    if (bytes_.size() < 2 || bytes_[0] != 'P') throw ImageIoError("not a netpbm file");
    pos_ = 2;
    return bytes_[1];
  }

  int number() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      throw ImageIoError("malformed netpbm header");
    }
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + (bytes_[pos_++] - '0');
      if (value > 1 << 20) throw ImageIoError("netpbm dimension too large");
    }
    return static_cast<int>(value);
  }

  std::string_view payload(std::size_t n) {
    // Exactly one whitespace byte separates the header from the raster.
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw ImageIoError("malformed netpbm header");
    }
    ++pos_;
    if (bytes_.size() - pos_ < n) throw ImageIoError("truncated netpbm raster");
    return bytes_.substr(pos_, n);
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

template <class Image>
Image decode(std::string_view bytes, char expected) {
  NetpbmReader r(bytes);
  if (r.magic() != expected) throw ImageIoError(std::string("expected P") + expected);
  const int w = r.number();
  const int h = r.number();
  const int maxval = r.number();
  if (w < 1 || h < 1) throw ImageIoError("netpbm dimensions must be >= 1");
  if (maxval != 255) throw ImageIoError("only maxval 255 is supported");
  Image img(w, h);
  auto raster = r.payload(img.data().size());
  std::copy(raster.begin(), raster.end(), img.data().begin());
  return img;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageIoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

std::string encode_ppm(const ImageRGB8& img) {
  std::string out = header('6', img.width(), img.height());
  out.append(reinterpret_cast<const char*>(img.data().data()), img.data().size());
  return out;
}

std::string encode_pgm(std::span<const std::uint8_t> gray, int width, int height) {
  std::string out = header('5', width, height);
  out.append(reinterpret_cast<const char*>(gray.data()), gray.size());
  return out;
}

ImageRGB8 decode_ppm(std::string_view bytes) { return decode<ImageRGB8>(bytes, '6'); }
ImageGray8 decode_pgm(std::string_view bytes) { return decode<ImageGray8>(bytes, '5'); }

void write_ppm(const std::filesystem::path& path, const ImageRGB8& img) { spit(path, encode_ppm(img)); }
ImageRGB8 read_ppm(const std::filesystem::path& path) { return decode_ppm(slurp(path)); }

template <class Tag>
void write_pgm(const std::filesystem::path& path, const Raster<1, Tag>& img) {
  spit(path, encode_pgm(img.data(), img.width(), img.height()));
}
template void write_pgm(const std::filesystem::path&, const ImageGray8&);
template void write_pgm(const std::filesystem::path&, const BinaryMask&);
template void write_pgm(const std::filesystem::path&, const EdgeMap&);

ImageGray8 read_pgm(const std::filesystem::path& path) { return decode_pgm(slurp(path)); }

BinaryMask read_mask_pgm(const std::filesystem::path& path) {
  const ImageGray8 gray = read_pgm(path);
  BinaryMask mask(gray.width(), gray.height());
  for (std::size_t i = 0; i < gray.data().size(); ++i) {
    const auto v = gray.data()[i];
    if (v != 0 && v != kWhite) throw ImageIoError("mask PGM contains values other than 0/255");
    mask.data()[i] = v;
  }
  return mask;
}

}  // namespace vip
