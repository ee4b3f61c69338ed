#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vip {

inline constexpr int kSampleRate = 16000;

/// Mono PCM16 at kSampleRate. start_t is the time of samples[0] in ms.
struct AudioBuffer {
  int sample_rate = kSampleRate;
  std::vector<std::int16_t> samples;
  double start_t = 0.0;

  double time_of(std::size_t index) const { return start_t + 1000.0 * static_cast<double>(index) / sample_rate; }
};

class InvalidSpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct BandPassSpec {
  double low_hz = 300.0;
  double high_hz = 4000.0;

  /// Throws InvalidSpecError unless 0 < low < high < sample_rate/2.
  void validate(int sample_rate = kSampleRate) const;
};

struct TapEvent {
  double t = 0.0;
  double peak = 0.0;

  bool operator==(const TapEvent&) const = default;
};

/// Direct-form-I biquad. Coefficients are normalised by a0.
class Biquad {
 public:
  /// Band-pass centred on the geometric mean of the cutoffs with
  /// Q = f0 / (high - low), scaled for unity gain at f0.
  static Biquad band_pass(const BandPassSpec& spec, int sample_rate = kSampleRate);

  double process(double x) noexcept {
    const double y = b0_ * x + b1_ * x1_ + b2_ * x2_ - a1_ * y1_ - a2_ * y2_;
    x2_ = x1_;
    x1_ = x;
    y2_ = y1_;
    y1_ = y;
    return y;
  }
  void reset() noexcept { x1_ = x2_ = y1_ = y2_ = 0.0; }

  double centre_hz() const noexcept { return centre_hz_; }
  double q() const noexcept { return q_; }

 private:
  double b0_ = 1, b1_ = 0, b2_ = 0, a1_ = 0, a2_ = 0;
  double x1_ = 0, x2_ = 0, y1_ = 0, y2_ = 0;
  double centre_hz_ = 0, q_ = 0;
};

/// One causal pass; same length and timestamps.
AudioBuffer band_pass(const AudioBuffer& buf, const BandPassSpec& spec);

/// Streaming tap detector. Samples are scanned as |s|/32768; each run above
/// the threshold yields its local maximum, and runs that start within the
/// refractory window of the previous tap are swallowed.
class TapDetector {
 public:
  TapDetector(double threshold, double refractory_ms);

  /// Appends detections for this chunk. A run still open at the end of the
  /// chunk is reported once it closes in a later chunk (or by flush()).
  void feed(const AudioBuffer& chunk, std::vector<TapEvent>& out);
  void flush(std::vector<TapEvent>& out);

  double threshold() const noexcept { return threshold_; }

 private:
  double threshold_;
  double refractory_ms_;
  bool in_run_ = false;
  bool run_suppressed_ = false;
  TapEvent run_best_{};
  std::optional<double> last_tap_t_;
};

/// Batch form of TapDetector over a whole, already band-passed buffer.
std::vector<TapEvent> detect_taps(const AudioBuffer& buf, double threshold, double refractory_ms);

class WavError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// RIFF/WAVE, PCM16 mono, 16 kHz, little-endian.
std::string encode_wav(const AudioBuffer& buf);
AudioBuffer decode_wav(std::string_view bytes);
void write_wav(const std::filesystem::path& path, const AudioBuffer& buf);
AudioBuffer read_wav(const std::filesystem::path& path);

}  // namespace vip
