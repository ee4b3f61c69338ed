#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vip/audio.hpp"
#include "vip/edges.hpp"
#include "vip/events.hpp"
#include "vip/gesture.hpp"
#include "vip/image.hpp"
#include "vip/model.hpp"
#include "vip/tracking.hpp"
#include "vip/vision.hpp"

namespace vip {

struct HsvColour {
  int h = 85;
  int s = 200;
  int v = 200;
};

/// 8-bit HSV (hue 0-255 over the full circle) to RGB.
std::array<std::uint8_t, 3> hsv_to_rgb(const HsvColour& c);

struct PointKey {
  TimeMs t = 0.0;
  Point2 pos{};
  bool visible = true;
};

/// Piecewise-linear path. Between two visible keys the position is
/// interpolated; otherwise the earlier key holds. Two keys with the same
/// time make a jump.
class PointTrajectory {
 public:
  PointTrajectory() = default;
  explicit PointTrajectory(std::vector<PointKey> keys);

  std::optional<Point2> at(TimeMs t) const;
  /// Drops keys after t and jumps to `pos` (or hides) from t on.
  void jump_to(TimeMs t, std::optional<Point2> pos);
  const std::vector<PointKey>& keys() const noexcept { return keys_; }

 private:
  std::vector<PointKey> keys_;
};

struct QuadKey {
  TimeMs t = 0.0;
  std::optional<Quad> quad;
};

class QuadTrajectory {
 public:
  QuadTrajectory() = default;
  explicit QuadTrajectory(std::vector<QuadKey> keys);

  std::optional<Quad> at(TimeMs t) const;
  void jump_to(TimeMs t, std::optional<Quad> quad);
  const std::vector<QuadKey>& keys() const noexcept { return keys_; }

 private:
  std::vector<QuadKey> keys_;
};

struct NoiseSpec {
  double luma_sigma = 0.0;
  double audio_rms = 0.0;
};

inline constexpr double kBurstPeak = 0.8;
inline constexpr double kBurstHz = 2000.0;
inline constexpr double kBurstTauMs = 15.0;

/// Ground truth for the simulated camera, display object, marker and
/// surface microphone.
struct WorldState {
  int width = 640;
  int height = 480;
  double frame_rate = 30.0;
  TimeMs duration = 0.0;

  QuadTrajectory quad_pose;
  PointTrajectory marker_pos;
  HsvColour marker_colour{};
  double marker_radius = 8.0;
  std::vector<TimeMs> taps;

  NoiseSpec noise{};
  std::uint64_t seed = 0;
  /// Global gain on scene radiance before clipping.
  double illumination = 1.0;
  std::uint8_t background = 20;
  std::uint8_t display_value = 220;

  /// Throws std::invalid_argument on non-positive frame rate or size.
  void validate() const;
};

class OutOfRangeTimeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Camera frame at t in [0, duration].
ImageRGB8 render_world(const WorldState& w, TimeMs t);

/// Whole-duration microphone signal.
AudioBuffer synth_audio(const WorldState& w);
/// Samples [first, first + count) of the same signal; any split of the
/// timeline yields the same samples.
AudioBuffer synth_audio_range(const WorldState& w, std::size_t first, std::size_t count);

struct PipelineConfig {
  HsvThresholds marker_thresholds{70, 100, 100, 255, 80, 255};
  double pre_blur_sigma = 1.0;
  CannyParams canny{};
  /// Edges within this many pixels of the marker are ignored for the quad.
  int marker_exclusion_px = 4;
  BandPassSpec band{};
  double tap_threshold = 0.25;
  double refractory_ms = 100.0;
  FsmConfig fsm{};
};

struct Perception {
  BinaryMask marker_mask;
  EdgeMap edges;
  std::optional<Quad> quad;
};

/// Marker half of the vision path: blur, HSV segmentation, pyramid scrub.
BinaryMask marker_mask(const ImageRGB8& frame, const PipelineConfig& cfg);

/// The per-frame vision path: blur, HSV segmentation, pyramid scrub for the
/// marker; Canny and quad extraction for the display object.
Perception perceive(const ImageRGB8& frame, const PipelineConfig& cfg);

Palette default_palette();

struct Scenario {
  std::string name;
  WorldState world;
  Palette palette;
  PipelineConfig pipeline;
  /// Golden files, already resolved against the scenario's directory.
  std::optional<std::filesystem::path> expected_session;
  std::optional<std::filesystem::path> expected_effects;
};

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Scenario parse_scenario(std::string_view json, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

/// One end-to-end session: renders the world frame by frame, runs
/// perception, audio, fusion and the gesture engine in timestamp order and
/// applies gestures to the design state.
class Session {
 public:
  using Sink = std::function<void(const Json&)>;

  Session(WorldState world, Palette palette, PipelineConfig cfg);

  /// Receives every move/tap/gesture/effect line as it is produced.
  void set_sink(Sink sink) { sink_ = std::move(sink); }

  TimeMs frame_time(std::size_t index) const;
  TimeMs next_frame_time() const { return frame_time(frame_); }
  std::size_t frames_done() const noexcept { return frame_; }
  bool finished() const { return next_frame_time() > world_.duration; }

  /// Processes the next frame. Returns its perception output.
  const Perception& step_frame();
  /// Camera frame of the last step.
  const ImageRGB8& last_frame() const noexcept { return frame_image_; }
  /// Reports taps still pending in the audio path.
  void finish();

  /// Earliest time at which a new tap can still be heard (audio before this
  /// point has already been processed).
  TimeMs audio_horizon() const;

  WorldState& world() noexcept { return world_; }
  const WorldState& world_state() const noexcept { return world_; }
  const SessionState& design() const noexcept { return design_; }
  SessionState& design() noexcept { return design_; }
  const MarkerTrack& marker() const noexcept { return marker_; }
  const DisplayObjectTrack& display_object() const noexcept { return dobj_; }
  const GestureEngine& engine() const noexcept { return engine_; }
  const PipelineConfig& config() const noexcept { return cfg_; }
  const std::vector<std::string>& log() const noexcept { return log_; }

 private:
  void emit(const Json& line);
  void pump_audio(TimeMs until);
  void deliver(const FsmInput& in);

  WorldState world_;
  PipelineConfig cfg_;
  SessionState design_;
  MarkerTrack marker_;
  DisplayObjectTrack dobj_;
  GestureEngine engine_;
  Biquad filter_;
  TapDetector detector_;
  std::size_t audio_done_ = 0;
  std::vector<TapEvent> pending_taps_;
  std::vector<MarkerSample> history_;
  std::size_t frame_ = 0;
  ImageRGB8 frame_image_{1, 1};
  Perception last_{BinaryMask(1, 1), EdgeMap(1, 1), std::nullopt};
  std::vector<std::string> log_;
  Sink sink_;
};

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> dump_frames;
};

struct RunResult {
  std::vector<std::string> events;
  SessionState final_state;
  std::size_t frames = 0;

  std::string events_jsonl() const;
  std::string effects_jsonl() const;
};

RunResult run_scenario(const Scenario& sc, const RunOptions& opts = {});

}  // namespace vip
