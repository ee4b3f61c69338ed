#include "vip/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace vip {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double unit_from(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

// Standard normal from a counter, so any slice of the stream is reproducible.
double counter_gaussian(std::uint64_t seed, std::uint64_t index) {
  const double u1 = unit_from(splitmix64(seed ^ splitmix64(2 * index)));
  const double u2 = unit_from(splitmix64(seed ^ splitmix64(2 * index + 1)));
  return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Point2 lerp(Point2 a, Point2 b, double f) { return {a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f}; }

template <class Key>
std::size_t key_before(const std::vector<Key>& keys, TimeMs t) {
  const auto it = std::upper_bound(keys.begin(), keys.end(), t, [](TimeMs v, const Key& k) { return v < k.t; });
  return static_cast<std::size_t>(it - keys.begin());
}

template <class Key>
void sort_keys(std::vector<Key>& keys) {
  std::stable_sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) { return a.t < b.t; });
}

std::uint8_t clamp_u8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

std::size_t total_samples(const WorldState& w) {
  return static_cast<std::size_t>(std::floor(w.duration * kSampleRate / 1000.0)) + 1;
}

}  // namespace

std::array<std::uint8_t, 3> hsv_to_rgb(const HsvColour& c) {
  const double h = std::clamp(c.h, 0, 255) * 6.0 / 256.0;
  const double s = std::clamp(c.s, 0, 255) / 255.0;
  const double v = std::clamp(c.v, 0, 255);
  const int sector = static_cast<int>(h) % 6;
  const double f = h - std::floor(h);
  const double p = v * (1 - s);
  const double q = v * (1 - s * f);
  const double u = v * (1 - s * (1 - f));
  double r = v, g = u, b = p;
  switch (sector) {
    case 0: r = v, g = u, b = p; break;
    case 1: r = q, g = v, b = p; break;
    case 2: r = p, g = v, b = u; break;
    case 3: r = p, g = q, b = v; break;
    case 4: r = u, g = p, b = v; break;
    default: r = v, g = p, b = q; break;
  }
  return {clamp_u8(r), clamp_u8(g), clamp_u8(b)};
}

PointTrajectory::PointTrajectory(std::vector<PointKey> keys) : keys_(std::move(keys)) { sort_keys(keys_); }

std::optional<Point2> PointTrajectory::at(TimeMs t) const {
  const std::size_t n = key_before(keys_, t);
  if (n == 0) return std::nullopt;
  const PointKey& a = keys_[n - 1];
  if (!a.visible) return std::nullopt;
  if (n == keys_.size() || !keys_[n].visible) return a.pos;
  const PointKey& b = keys_[n];
  return lerp(a.pos, b.pos, (t - a.t) / (b.t - a.t));
}

void PointTrajectory::jump_to(TimeMs t, std::optional<Point2> pos) {
  // Freeze the current position at t, then jump.
  const auto here = at(t);
  keys_.erase(keys_.begin() + static_cast<std::ptrdiff_t>(key_before(keys_, t)), keys_.end());
  keys_.push_back({t, here.value_or(Point2{}), here.has_value()});
  keys_.push_back({t, pos.value_or(Point2{}), pos.has_value()});
}

QuadTrajectory::QuadTrajectory(std::vector<QuadKey> keys) : keys_(std::move(keys)) { sort_keys(keys_); }

std::optional<Quad> QuadTrajectory::at(TimeMs t) const {
  const std::size_t n = key_before(keys_, t);
  if (n == 0) return std::nullopt;
  const QuadKey& a = keys_[n - 1];
  if (!a.quad) return std::nullopt;
  if (n == keys_.size() || !keys_[n].quad) return a.quad;
  const QuadKey& b = keys_[n];
  const double f = (t - a.t) / (b.t - a.t);
  Quad q;
  for (std::size_t i = 0; i < 4; ++i) q.corners[i] = lerp(a.quad->corners[i], b.quad->corners[i], f);
  return q;
}

void QuadTrajectory::jump_to(TimeMs t, std::optional<Quad> quad) {
  const auto here = at(t);
  keys_.erase(keys_.begin() + static_cast<std::ptrdiff_t>(key_before(keys_, t)), keys_.end());
  keys_.push_back({t, here});
  keys_.push_back({t, quad});
}

void WorldState::validate() const {
  if (width < 1 || height < 1) throw std::invalid_argument("frame size must be positive");
  if (!(frame_rate > 0.0)) throw std::invalid_argument("frame rate must be positive");
  if (!(duration >= 0.0)) throw std::invalid_argument("duration must be non-negative");
  if (noise.luma_sigma < 0.0 || noise.audio_rms < 0.0) throw std::invalid_argument("noise must be non-negative");
}

ImageRGB8 render_world(const WorldState& w, TimeMs t) {
  if (!(t >= 0.0 && t <= w.duration)) {
    throw OutOfRangeTimeError("render time " + std::to_string(t) + " outside [0, " + std::to_string(w.duration) +
                              "]");
  }
  ImageRGB8 img(w.width, w.height);
  auto px = img.data();
  const std::uint8_t bg = clamp_u8(w.background * w.illumination);
  std::fill(px.begin(), px.end(), bg);

  if (const auto q = w.quad_pose.at(t)) {
    const std::uint8_t fill = clamp_u8(w.display_value * w.illumination);
    // Signed distance to each edge line, positive inside.
    double area = 0.0;
    for (std::size_t i = 0; i < 4; ++i) area += cross(Point2{}, q->corners[i], q->corners[(i + 1) % 4]);
    const double orient = area < 0 ? -1.0 : 1.0;
    std::array<std::array<double, 3>, 4> edge{};
    for (std::size_t i = 0; i < 4; ++i) {
      const Point2 a = q->corners[i];
      const Point2 b = q->corners[(i + 1) % 4];
      const double len = std::hypot(b.x - a.x, b.y - a.y);
      if (len == 0.0) continue;
      const double nx = -(b.y - a.y) / len * orient;
      const double ny = (b.x - a.x) / len * orient;
      edge[i] = {nx, ny, -(nx * a.x + ny * a.y)};
    }
    // Pixels integrate light over their footprint: coverage of the unit
    // square around each centre, from a 4x4 grid of sub-samples near edges.
    constexpr int kSub = 4;
    constexpr double kReach = 0.7072;
    auto coverage = [&](double x, double y) {
      double d = 1e9;
      for (const auto& e : edge) d = std::min(d, e[0] * x + e[1] * y + e[2]);
      if (d >= kReach) return 1.0;
      if (d <= -kReach) return 0.0;
      int hits = 0;
      for (int sy = 0; sy < kSub; ++sy) {
        for (int sx = 0; sx < kSub; ++sx) {
          const Point2 s{x - 0.5 + (sx + 0.5) / kSub, y - 0.5 + (sy + 0.5) / kSub};
          bool in = true;
          for (const auto& e : edge) in &= e[0] * s.x + e[1] * s.y + e[2] >= 0.0;
          hits += in;
        }
      }
      return hits / double(kSub * kSub);
    };
    double x0 = w.width, x1 = -1, y0 = w.height, y1 = -1;
    for (const auto& c : q->corners) {
      x0 = std::min(x0, c.x), x1 = std::max(x1, c.x);
      y0 = std::min(y0, c.y), y1 = std::max(y1, c.y);
    }
    const int ys = std::max(0, static_cast<int>(std::floor(y0)));
    const int ye = std::min(w.height - 1, static_cast<int>(std::ceil(y1)));
    const int xs = std::max(0, static_cast<int>(std::floor(x0)));
    const int xe = std::min(w.width - 1, static_cast<int>(std::ceil(x1)));
    for (int y = ys; y <= ye; ++y) {
      for (int x = xs; x <= xe; ++x) {
        const double c = coverage(x, y);
        if (c <= 0.0) continue;
        const std::uint8_t v = c >= 1.0 ? fill : clamp_u8(bg + (fill - bg) * c);
        img(x, y, 0) = img(x, y, 1) = img(x, y, 2) = v;
      }
    }
  }

  if (const auto m = w.marker_pos.at(t)) {
    const auto rgb = hsv_to_rgb(w.marker_colour);
    const double r = w.marker_radius;
    const int ys = std::max(0, static_cast<int>(std::ceil(m->y - r)));
    const int ye = std::min(w.height - 1, static_cast<int>(std::floor(m->y + r)));
    const int xs = std::max(0, static_cast<int>(std::ceil(m->x - r)));
    const int xe = std::min(w.width - 1, static_cast<int>(std::floor(m->x + r)));
    for (int y = ys; y <= ye; ++y) {
      for (int x = xs; x <= xe; ++x) {
        const double dx = x - m->x;
        const double dy = y - m->y;
        if (dx * dx + dy * dy <= r * r) {
          for (int c = 0; c < 3; ++c) img(x, y, c) = clamp_u8(rgb[static_cast<std::size_t>(c)] * w.illumination);
        }
      }
    }
  }

  if (w.noise.luma_sigma > 0.0) {
    std::uint64_t tbits = 0;
    static_assert(sizeof(double) == sizeof(tbits));
    std::memcpy(&tbits, &t, sizeof tbits);
    std::mt19937_64 rng(splitmix64(w.seed ^ splitmix64(tbits)));
    std::normal_distribution<double> noise(0.0, w.noise.luma_sigma);
    for (std::size_t i = 0; i < px.size(); i += 3) {
      const double n = noise(rng);
      for (std::size_t c = 0; c < 3; ++c) px[i + c] = clamp_u8(px[i + c] + n);
    }
  }
  return img;
}

AudioBuffer synth_audio_range(const WorldState& w, std::size_t first, std::size_t count) {
  AudioBuffer buf;
  buf.start_t = 1000.0 * static_cast<double>(first) / kSampleRate;
  buf.samples.resize(count);
  const double burst_len = 10.0 * kBurstTauMs;
  const std::uint64_t audio_seed = splitmix64(w.seed ^ 0xA0D10ull);

  std::vector<double> acc(count, 0.0);
  const double t0 = buf.start_t;
  const double t1 = buf.time_of(count);
  for (const TimeMs tap : w.taps) {
    if (tap + burst_len < t0 || tap >= t1) continue;
    for (std::size_t i = 0; i < count; ++i) {
      const double tau = buf.time_of(i) - tap;
      if (tau < 0.0 || tau >= burst_len) continue;
      acc[i] += kBurstPeak * std::exp(-tau / kBurstTauMs) * std::sin(2.0 * std::numbers::pi * kBurstHz * tau / 1000.0);
    }
  }
  for (std::size_t i = 0; i < count; ++i) {
    double v = acc[i];
    if (w.noise.audio_rms > 0.0) v += w.noise.audio_rms * counter_gaussian(audio_seed, first + i);
    buf.samples[i] = static_cast<std::int16_t>(std::clamp(std::lround(v * 32768.0), -32768L, 32767L));
  }
  return buf;
}

AudioBuffer synth_audio(const WorldState& w) { return synth_audio_range(w, 0, total_samples(w)); }

BinaryMask marker_mask(const ImageRGB8& frame, const PipelineConfig& cfg) {
  const ImageRGB8 smooth = gaussian_blur(frame, cfg.pre_blur_sigma);
  return pyramid_scrub(segment(rgb_to_hsv(smooth), cfg.marker_thresholds));
}

Perception perceive(const ImageRGB8& frame, const PipelineConfig& cfg) {
  BinaryMask mask = marker_mask(frame, cfg);
  EdgeMap edges = canny(rgb_to_gray(frame), cfg.canny);
  if (count_white(mask) > 0) suppress_edges(edges, dilate(mask, cfg.marker_exclusion_px));
  auto quad = extract_quad(edges);
  return {std::move(mask), std::move(edges), quad};
}

Palette default_palette() {
  Palette p;
  p.slots.push_back({SlotId{"button"}, ElementKind::Input, "Play", ActionBinding{ActionKind::MovieStart, {}, {}}});
  p.slots.push_back({SlotId{"screen"}, ElementKind::Output, "Screen", std::nullopt});
  p.slots.push_back({SlotId{"stop"}, ElementKind::Input, "Stop", ActionBinding{ActionKind::MovieStop, {}, {}}});
  p.slots.push_back({SlotId{"scroll"}, ElementKind::Input, "Scroll", ActionBinding{ActionKind::MovieScroll, {}, {}}});
  return p;
}

// ---------------------------------------------------------------------------
// Scenario files

namespace {

Point2 point_from(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw ScenarioError("expected [x, y], got " + j.dump());
  return {j[0].get<double>(), j[1].get<double>()};
}

std::pair<int, int> pair_from(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw ScenarioError("expected [lo, hi], got " + j.dump());
  return {j[0].get<int>(), j[1].get<int>()};
}

Quad quad_from(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw ScenarioError("quad needs four corners");
  Quad q;
  for (std::size_t i = 0; i < 4; ++i) q.corners[i] = point_from(j[i]);
  return q;
}

PipelineConfig pipeline_from(const Json& j) {
  PipelineConfig cfg;
  if (j.contains("marker_thresholds")) {
    const Json& m = j["marker_thresholds"];
    std::tie(cfg.marker_thresholds.hue_lo, cfg.marker_thresholds.hue_hi) = pair_from(m.at("hue"));
    std::tie(cfg.marker_thresholds.sat_lo, cfg.marker_thresholds.sat_hi) = pair_from(m.at("sat"));
    std::tie(cfg.marker_thresholds.val_lo, cfg.marker_thresholds.val_hi) = pair_from(m.at("val"));
  }
  if (j.contains("canny")) {
    const Json& c = j["canny"];
    cfg.canny.low_thresh = c.value("low", cfg.canny.low_thresh);
    cfg.canny.high_thresh = c.value("high", cfg.canny.high_thresh);
    cfg.canny.sigma = c.value("sigma", cfg.canny.sigma);
  }
  if (j.contains("band")) {
    const Point2 b = point_from(j["band"]);
    cfg.band = {b.x, b.y};
  }
  cfg.pre_blur_sigma = j.value("pre_blur_sigma", cfg.pre_blur_sigma);
  cfg.marker_exclusion_px = j.value("marker_exclusion_px", cfg.marker_exclusion_px);
  cfg.tap_threshold = j.value("tap_threshold", cfg.tap_threshold);
  cfg.refractory_ms = j.value("refractory_ms", cfg.refractory_ms);
  cfg.marker_thresholds.validate();
  cfg.canny.validate();
  cfg.band.validate();
  return cfg;
}

}  // namespace

Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ScenarioError(std::string("scenario is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ScenarioError("scenario must be a JSON object");

  Scenario sc;
  try {
    sc.name = doc.value("name", std::string{});
    WorldState& w = sc.world;
    w.duration = doc.at("duration_ms").get<double>();
    w.seed = doc.value("seed", std::uint64_t{0});
    if (doc.contains("frame")) {
      const Json& f = doc["frame"];
      w.width = f.value("width", w.width);
      w.height = f.value("height", w.height);
      w.frame_rate = f.value("fps", w.frame_rate);
    }
    if (doc.contains("noise")) {
      w.noise.luma_sigma = doc["noise"].value("luma_sigma", 0.0);
      w.noise.audio_rms = doc["noise"].value("audio_rms", 0.0);
    }
    w.illumination = doc.value("illumination", 1.0);

    std::vector<QuadKey> qkeys;
    for (const Json& k : doc.value("quad", Json::array())) {
      QuadKey key{k.at("t").get<double>(), std::nullopt};
      if (k.value("visible", true)) key.quad = quad_from(k.at("corners"));
      qkeys.push_back(key);
    }
    w.quad_pose = QuadTrajectory(std::move(qkeys));

    if (doc.contains("marker")) {
      const Json& m = doc["marker"];
      if (m.contains("color")) {
        const Json& c = m["color"];
        if (!c.is_array() || c.size() != 3) throw ScenarioError("marker color must be [h, s, v]");
        w.marker_colour = {c[0].get<int>(), c[1].get<int>(), c[2].get<int>()};
      }
      w.marker_radius = m.value("radius", w.marker_radius);
      std::vector<PointKey> keys;
      for (const Json& k : m.value("path", Json::array())) {
        PointKey key{k.at("t").get<double>(), {}, k.value("visible", true)};
        if (!key.visible) {
        } else if (k.contains("pos")) {
          key.pos = point_from(k["pos"]);
        } else if (k.contains("model")) {
          // Model coordinates ride on the display object at that instant.
          const auto q = w.quad_pose.at(key.t);
          if (!q) throw ScenarioError("model-space marker key at t=" + std::to_string(key.t) + " without a quad");
          key.pos = warp_point(homography_from_quad(*q), point_from(k["model"]));
        } else {
          throw ScenarioError("marker key needs pos, model or visible:false");
        }
        keys.push_back(key);
      }
      w.marker_pos = PointTrajectory(std::move(keys));
    }

    for (const Json& t : doc.value("taps", Json::array())) w.taps.push_back(t.get<double>());
    std::sort(w.taps.begin(), w.taps.end());
    for (const TimeMs t : w.taps) {
      if (t < 0.0 || t > w.duration) throw ScenarioError("tap at t=" + std::to_string(t) + " outside the duration");
    }
    w.validate();

    if (doc.contains("palette")) {
      sc.palette = doc["palette"].is_string() && doc["palette"].get<std::string>() == "default"
                       ? default_palette()
                       : palette_from_json(doc["palette"]);
    }
    sc.palette.validate();
    if (doc.contains("pipeline")) sc.pipeline = pipeline_from(doc["pipeline"]);

    if (doc.contains("expected")) {
      const Json& e = doc["expected"];
      if (e.contains("session")) sc.expected_session = base_dir / e["session"].get<std::string>();
      if (e.contains("effects")) sc.expected_effects = base_dir / e["effects"].get<std::string>();
    }
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception& e) {
    throw ScenarioError(std::string("bad scenario: ") + e.what());
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("cannot open scenario " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.parent_path());
}

// ---------------------------------------------------------------------------
// Session

Session::Session(WorldState world, Palette palette, PipelineConfig cfg)
    : world_(std::move(world)),
      cfg_(std::move(cfg)),
      marker_(0, cfg_.marker_thresholds),
      engine_(cfg_.fsm),
      filter_(Biquad::band_pass(cfg_.band)),
      detector_(cfg_.tap_threshold, cfg_.refractory_ms) {
  world_.validate();
  design_.palette = std::move(palette);
}

TimeMs Session::frame_time(std::size_t index) const {
  return std::round(static_cast<double>(index) * 1000.0 / world_.frame_rate);
}

TimeMs Session::audio_horizon() const { return 1000.0 * static_cast<double>(audio_done_) / kSampleRate; }

void Session::emit(const Json& line) {
  log_.push_back(line.dump());
  if (sink_) sink_(line);
}

void Session::pump_audio(TimeMs until) {
  const std::size_t limit = total_samples(world_);
  const auto wanted = static_cast<std::size_t>(std::floor(until * kSampleRate / 1000.0)) + 1;
  const std::size_t target = std::min(limit, wanted);
  if (target <= audio_done_) return;
  AudioBuffer chunk = synth_audio_range(world_, audio_done_, target - audio_done_);
  for (auto& s : chunk.samples) {
    s = static_cast<std::int16_t>(std::clamp(std::lround(filter_.process(s)), -32768L, 32767L));
  }
  detector_.feed(chunk, pending_taps_);
  audio_done_ = target;
}

void Session::deliver(const FsmInput& in) {
  for (const GestureEvent& g : engine_.step(in, design_, dobj_)) {
    emit(to_json(g));
    for (const Effect& e : apply_gesture(design_, g)) emit(to_json(e));
  }
}

const Perception& Session::step_frame() {
  const TimeMs t = next_frame_time();
  frame_image_ = render_world(world_, t);
  last_ = perceive(frame_image_, cfg_);
  const auto move = marker_.update(last_.marker_mask, t);
  dobj_.update(last_.quad);

  history_.push_back({t, marker_.live_centre()});
  const auto stale = std::find_if(history_.begin(), history_.end(),
                                  [t](const MarkerSample& s) { return t - s.t <= 4 * kAssociationWindowMs; });
  history_.erase(history_.begin(), stale);

  // One frame of lookahead lets a burst that began before t finish ringing.
  pump_audio(t + 1000.0 / world_.frame_rate);
  std::size_t used = 0;
  for (; used < pending_taps_.size() && pending_taps_[used].t <= t; ++used) {
    const TapEvent& tap = pending_taps_[used];
    emit(to_json(tap));
    if (auto touch = fuse(tap, history_, dobj_)) {
      const auto& last = engine_.state().last_t;
      if (last && touch->t < *last) touch->t = *last;
      deliver(*touch);
    }
  }
  pending_taps_.erase(pending_taps_.begin(), pending_taps_.begin() + static_cast<std::ptrdiff_t>(used));

  if (move) {
    emit(to_json(*move));
    deliver(*move);
  }
  deliver(Tick{t});
  ++frame_;
  return last_;
}

void Session::finish() {
  pump_audio(world_.duration);
  detector_.flush(pending_taps_);
  for (const TapEvent& tap : pending_taps_) {
    emit(to_json(tap));
    if (auto touch = fuse(tap, history_, dobj_)) {
      const auto& last = engine_.state().last_t;
      if (last && touch->t < *last) touch->t = *last;
      deliver(*touch);
    }
  }
  pending_taps_.clear();
}

std::string RunResult::events_jsonl() const {
  std::string out;
  for (const auto& l : events) out += l + "\n";
  return out;
}

std::string RunResult::effects_jsonl() const {
  std::string out;
  for (const auto& l : events) {
    if (l.rfind(R"({"type":"effect")", 0) == 0) out += l + "\n";
  }
  return out;
}

RunResult run_scenario(const Scenario& sc, const RunOptions& opts) {
  WorldState world = sc.world;
  if (opts.seed) world.seed = *opts.seed;
  Session session(std::move(world), sc.palette, sc.pipeline);
  if (opts.dump_frames) std::filesystem::create_directories(*opts.dump_frames);

  while (!session.finished()) {
    session.step_frame();
    if (opts.dump_frames) {
      char name[32];
      std::snprintf(name, sizeof name, "frame_%05zu.ppm", session.frames_done() - 1);
      write_ppm(*opts.dump_frames / name, session.last_frame());
      std::snprintf(name, sizeof name, "overlay_%05zu.ppm", session.frames_done() - 1);
      const auto& w = session.world_state();
      write_ppm(*opts.dump_frames / name, render_layout(session.design(), session.display_object(), w.width, w.height));
    }
  }
  session.finish();
  return {session.log(), session.design(), session.frames_done()};
}

}  // namespace vip
