#include "vip/audio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace vip {
namespace {

std::int16_t to_pcm(double v) {
  return static_cast<std::int16_t>(std::clamp(std::lround(v), -32768L, 32767L));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}
std::uint32_t get_u32(std::string_view b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[at + static_cast<std::size_t>(i)]);
  return v;
}
std::uint16_t get_u16(std::string_view b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    (static_cast<unsigned char>(b[at + 1]) << 8));
}

}  // namespace

void BandPassSpec::validate(int sample_rate) const {
  if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < sample_rate / 2.0)) {
    throw InvalidSpecError("band-pass cutoffs must satisfy 0 < low < high < sample_rate/2");
  }
}

Biquad Biquad::band_pass(const BandPassSpec& spec, int sample_rate) {
  spec.validate(sample_rate);
  Biquad f;
  f.centre_hz_ = std::sqrt(spec.low_hz * spec.high_hz);
  f.q_ = f.centre_hz_ / (spec.high_hz - spec.low_hz);
  const double w0 = 2.0 * std::numbers::pi * f.centre_hz_ / sample_rate;
  const double alpha = std::sin(w0) / (2.0 * f.q_);
  const double a0 = 1.0 + alpha;
  // Constant-skirt band-pass divided by Q: 0 dB at the centre frequency.
  f.b0_ = alpha / a0;
  f.b1_ = 0.0;
  f.b2_ = -alpha / a0;
  f.a1_ = -2.0 * std::cos(w0) / a0;
  f.a2_ = (1.0 - alpha) / a0;
  return f;
}

AudioBuffer band_pass(const AudioBuffer& buf, const BandPassSpec& spec) {
  Biquad f = Biquad::band_pass(spec, buf.sample_rate);
  AudioBuffer out;
  out.sample_rate = buf.sample_rate;
  out.start_t = buf.start_t;
  out.samples.resize(buf.samples.size());
  for (std::size_t i = 0; i < buf.samples.size(); ++i) out.samples[i] = to_pcm(f.process(buf.samples[i]));
  return out;
}

TapDetector::TapDetector(double threshold, double refractory_ms)
    : threshold_(threshold), refractory_ms_(refractory_ms) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw std::invalid_argument("tap threshold must lie in (0,1]");
  if (!(refractory_ms >= 0.0)) throw std::invalid_argument("refractory window must be >= 0");
}

void TapDetector::feed(const AudioBuffer& chunk, std::vector<TapEvent>& out) {
  for (std::size_t i = 0; i < chunk.samples.size(); ++i) {
    const double a = std::abs(static_cast<double>(chunk.samples[i])) / 32768.0;
    if (a > threshold_) {
      const double t = chunk.time_of(i);
      if (!in_run_) {
        in_run_ = true;
        run_suppressed_ = last_tap_t_ && t - *last_tap_t_ < refractory_ms_;
        run_best_ = {t, a};
      } else if (a > run_best_.peak) {
        run_best_ = {t, a};
      }
    } else if (in_run_) {
      flush(out);
    }
  }
}

void TapDetector::flush(std::vector<TapEvent>& out) {
  if (!in_run_) return;
  in_run_ = false;
  if (run_suppressed_) return;
  out.push_back(run_best_);
  last_tap_t_ = run_best_.t;
}

std::vector<TapEvent> detect_taps(const AudioBuffer& buf, double threshold, double refractory_ms) {
  TapDetector detector(threshold, refractory_ms);
  std::vector<TapEvent> taps;
  detector.feed(buf, taps);
  detector.flush(taps);
  return taps;
}

std::string encode_wav(const AudioBuffer& buf) {
  const auto data_bytes = static_cast<std::uint32_t>(buf.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(buf.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(buf.sample_rate * 2));
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_bytes);
  for (std::int16_t s : buf.samples) put_u16(out, static_cast<std::uint16_t>(s));
  return out;
}

AudioBuffer decode_wav(std::string_view b) {
  if (b.size() < 12 || b.substr(0, 4) != "RIFF" || b.substr(8, 4) != "WAVE") throw WavError("not a RIFF/WAVE file");
  bool have_fmt = false;
  AudioBuffer out;
  std::size_t at = 12;
  while (at + 8 <= b.size()) {
    const std::string_view id = b.substr(at, 4);
    const std::uint32_t size = get_u32(b, at + 4);
    const std::size_t body = at + 8;
    if (body + size > b.size()) throw WavError("truncated WAV chunk");
    if (id == "fmt ") {
      if (size < 16) throw WavError("short fmt chunk");
      if (get_u16(b, body) != 1) throw WavError("only PCM WAV is supported");
      if (get_u16(b, body + 2) != 1) throw WavError("only mono WAV is supported");
      out.sample_rate = static_cast<int>(get_u32(b, body + 4));
      if (out.sample_rate != kSampleRate) throw WavError("sample rate must be 16000 Hz");
      if (get_u16(b, body + 14) != 16) throw WavError("only 16-bit WAV is supported");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw WavError("data chunk before fmt chunk");
      out.samples.resize(size / 2);
      for (std::size_t i = 0; i < out.samples.size(); ++i) {
        out.samples[i] = static_cast<std::int16_t>(get_u16(b, body + 2 * i));
      }
      return out;
    }
    at = body + size + (size & 1);
  }
  throw WavError("WAV has no data chunk");
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& buf) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WavError("cannot write " + path.string());
  const std::string bytes = encode_wav(buf);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return decode_wav(os.str());
}

}  // namespace vip
