// maats: closed-loop cable-suspended transport simulator.
//
//   maats simulate --config <path> [--mu <f>] [--allocator sqp|baseline]
//                  [--duration <s>] [--dt <s>] [--out <dir>] [--plot]
//   maats sweep    --config <path> --mu 0.15,0.75,1.35 --out <dir>
//   maats bench    --config <path> --samples <k>
//   maats config   --config <path>      (prints the effective configuration)
//
// --config falls back to $MAATS_CONFIG, then to the built-in defaults.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "maats/harness.hpp"

namespace {

maats::ScenarioConfig resolve_config(const std::string& path) {
  if (!path.empty()) return maats::load_config_file(path);
  if (const char* env = std::getenv("MAATS_CONFIG"); env && *env) return maats::load_config_file(env);
  return maats::load_config("");
}

std::filesystem::path prepare_out(const maats::ScenarioConfig& cfg, const std::string& override_dir) {
  const std::filesystem::path dir = override_dir.empty() ? cfg.output.dir : override_dir;
  std::filesystem::create_directories(dir);
  return dir;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative cable-suspended load transport simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;

  auto* sim = app.add_subcommand("simulate", "Run one closed-loop mission");
  std::optional<double> mu;
  std::optional<std::string> allocator;
  std::optional<double> duration;
  std::optional<double> dt;
  bool plot = false;
  sim->add_option("--config", config_path, "Scenario JSON file");
  sim->add_option("--mu", mu, "Cable-alignment weight");
  sim->add_option("--allocator", allocator, "Tension allocator")->check(CLI::IsMember({"sqp", "baseline"}));
  sim->add_option("--duration", duration, "Mission length (s)");
  sim->add_option("--dt", dt, "Step size (s)");
  sim->add_option("--out", out_dir, "Output directory");
  sim->add_flag("--plot", plot, "Also write SVG charts");

  auto* sweep = app.add_subcommand("sweep", "Run one mission per alignment weight");
  std::vector<double> mus;
  sweep->add_option("--config", config_path, "Scenario JSON file");
  sweep->add_option("--mu", mus, "Comma-separated weights")->delimiter(',')->required();
  sweep->add_option("--out", out_dir, "Output directory");

  auto* bench = app.add_subcommand("bench", "Time warm-started allocator cycles");
  int samples = 20000;
  bench->add_option("--config", config_path, "Scenario JSON file");
  bench->add_option("--samples", samples, "Number of solves")->check(CLI::Range(1000, 100000000));

  auto* show = app.add_subcommand("config", "Print the effective configuration as JSON");
  show->add_option("--config", config_path, "Scenario JSON file");

  CLI11_PARSE(app, argc, argv);

  try {
    maats::ScenarioConfig cfg = resolve_config(config_path);

    if (sim->parsed()) {
      if (mu) cfg.alloc.mu = *mu;
      if (allocator) cfg.alloc.kind = *allocator == "sqp" ? maats::AllocatorKind::Sqp : maats::AllocatorKind::Baseline;
      if (duration) cfg.duration = *duration;
      if (dt) cfg.dt = *dt;
      cfg.validate();
      const maats::RunResult run = maats::run_simulation(cfg);
      const auto dir = prepare_out(cfg, out_dir);
      {
        std::ofstream csv(dir / cfg.output.timeseries);
        maats::write_timeseries_csv(csv, run.records);
      }
      write_file(dir / cfg.output.metrics, maats::metrics_json(run.metrics));
      if (plot) maats::write_plots(dir.string(), run.records);
      const auto& m = run.metrics;
      std::cout << "rms_error " << m.rms_error << " m, max_error " << m.max_error
                << " m, min_angle " << m.min_pairwise_angle << " deg, J_T " << m.J_T << " N s\n"
                << "wrote " << (dir / cfg.output.timeseries).string() << " and "
                << (dir / cfg.output.metrics).string() << '\n';
    } else if (sweep->parsed()) {
      const auto results = maats::sweep_mu(cfg, mus);
      const auto dir = prepare_out(cfg, out_dir);
      write_file(dir / cfg.output.sweep, maats::sweep_json(results));
      for (const auto& e : results) {
        std::cout << "mu " << e.mu << ": min_angle " << e.metrics.min_pairwise_angle << " deg, J_T "
                  << e.metrics.J_T << " N s, rms_error " << e.metrics.rms_error << " m\n";
      }
      std::cout << "wrote " << (dir / cfg.output.sweep).string() << '\n';
    } else if (bench->parsed()) {
      const maats::TimingSummary ts = maats::bench_allocator(cfg, samples);
      std::cout << "samples " << ts.samples << ", mean " << ts.mean * 1e3 << " ms, p99 " << ts.p99 * 1e3
                << " ms, max " << ts.max * 1e3 << " ms, mean iterations " << ts.mean_iterations
                << ", converged " << ts.converged << '\n';
    } else if (show->parsed()) {
      std::cout << maats::serialize_config(cfg) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
