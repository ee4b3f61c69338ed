#include <csignal>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "vip/server.hpp"
#include "vip/sim.hpp"

namespace {

vip::SessionServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int run(const std::string& scenario_path, std::optional<std::uint64_t> seed, const std::string& out_path,
        const std::string& dump_dir, const std::string& session_path) {
  const vip::Scenario sc = vip::load_scenario(scenario_path);
  vip::RunOptions opts;
  opts.seed = seed;
  if (!dump_dir.empty()) opts.dump_frames = dump_dir;
  const vip::RunResult r = vip::run_scenario(sc, opts);

  if (out_path.empty() || out_path == "-") {
    std::cout << r.events_jsonl();
  } else {
    write_file(out_path, r.events_jsonl());
  }
  if (!session_path.empty()) write_file(session_path, vip::save_session(r.final_state));
  std::cerr << sc.name << ": " << r.frames << " frames, " << r.events.size() << " events, "
            << r.final_state.layout.size() << " elements\n";
  return 0;
}

int serve(std::uint16_t port, const std::string& scenario_path, const std::string& bind, std::size_t snapshot_every) {
  vip::WorldState world = vip::interactive_world();
  vip::Palette palette = vip::default_palette();
  vip::PipelineConfig cfg;
  if (!scenario_path.empty()) {
    const vip::Scenario sc = vip::load_scenario(scenario_path);
    world = sc.world;
    palette = sc.palette;
    cfg = sc.pipeline;
  }
  vip::Session session(std::move(world), std::move(palette), cfg);
  vip::SessionServer server(session, {port, bind, snapshot_every});
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "listening on " << bind << ":" << server.port() << "\n";
  server.run();
  g_server = nullptr;
  return 0;
}

int calibrate(const std::string& image_path) {
  const vip::ImageRGB8 img = vip::read_ppm(image_path);
  const auto t = vip::suggest_thresholds(img);
  if (!t) {
    std::cerr << "no saturated blob found in " << image_path << "\n";
    return 1;
  }
  vip::Json j;
  j["hue"] = {t->hue_lo, t->hue_hi};
  j["sat"] = {t->sat_lo, t->sat_hi};
  j["val"] = {t->val_lo, t->val_hi};
  std::cout << j.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vision-based interactive prototyping: simulator, session runner and protocol server"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "Run a scenario and write its event log");
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string dump;
  std::string session_out;
  run_cmd->add_option("scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", seed, "Override the scenario's noise seed");
  run_cmd->add_option("--out", out, "Event log (JSONL); stdout when omitted");
  run_cmd->add_option("--dump-frames", dump, "Write camera frames and layout overlays (PPM) here");
  run_cmd->add_option("--session", session_out, "Write the final session document here");

  auto* serve_cmd = app.add_subcommand("serve", "Serve the session protocol to one client");
  std::uint16_t port = 8765;
  std::string serve_scenario;
  std::string bind = "127.0.0.1";
  std::size_t snapshot_every = 1;
  serve_cmd->add_option("--port", port, "TCP port (0 picks one)")->capture_default_str();
  serve_cmd->add_option("--scenario", serve_scenario, "Play a scenario instead of an interactive world")
      ->check(CLI::ExistingFile);
  serve_cmd->add_option("--bind", bind, "Address to listen on")->capture_default_str();
  serve_cmd->add_option("--snapshot-every", snapshot_every, "Frames between snapshots")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* cal_cmd = app.add_subcommand("calibrate", "Suggest marker thresholds from a sample frame");
  std::string image;
  cal_cmd->add_option("--image", image, "PPM frame showing the marker")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return run(scenario, seed, out, dump, session_out);
    if (*serve_cmd) return serve(port, serve_scenario, bind, snapshot_every);
    if (*cal_cmd) return calibrate(image);
  } catch (const std::exception& e) {
    std::cerr << "vip: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
