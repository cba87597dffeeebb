#pragma once

// Closed-loop runner, metrics, mu sweep, allocator benchmark and the
// CSV / JSON / SVG writers behind the command line tool.

#include <iosfwd>
#include <string>
#include <vector>

#include "maats/scenario.hpp"

namespace maats {

struct TimeSeriesRecord {
  double t = 0.0;
  Vec3 xL, xLd, eL;
  std::vector<double> T_actual;
  std::vector<double> T_desired;
  std::vector<double> angles_deg;  // pairs (i, j), i < j, row-major
  std::vector<double> f_id;
  int iterations = 0;
  AllocStatus status = AllocStatus::Converged;
  double solve_time = 0.0;
  std::vector<bool> slack;
};

struct MetricsReport {
  int ticks = 0;
  double rms_error = 0.0;             // m
  double max_error = 0.0;             // m
  double min_pairwise_angle = 0.0;    // deg
  double J_T = 0.0;                   // N s
  std::vector<double> tension_mean;   // N, per cable
  std::vector<double> tension_max;    // N, per cable
  double peak_total_tension = 0.0;    // N
  double mean_total_tension = 0.0;    // N
  double peak_to_mean_ratio = 0.0;
  double mean_tension_spread = 0.0;   // N, time average of max_i T_i - min_i T_i
  /// Mean |T_actual - T_desired| per cable after `settle_time`, divided by
  /// that cable's mean tension over the same window.
  std::vector<double> tension_tracking_relative;
  double settle_time = 3.0;
  double solver_time_mean = 0.0;      // s
  double solver_time_p99 = 0.0;       // s
  double solver_time_max = 0.0;       // s
  double mean_iterations = 0.0;
  int fallback_count = 0;
  int slack_events = 0;               // ticks with at least one slack cable
};

struct RunResult {
  std::vector<TimeSeriesRecord> records;
  MetricsReport metrics;
  std::vector<Vec3> uL_history;
  double max_newton_residual = 0.0;  // N, over all ticks
};

/// Thrown when the plant state stops being finite.
class SimulationDiverged : public Error {
 public:
  SimulationDiverged(long tick, const std::string& what)
      : Error(ErrorCode::NonFiniteState, "tick " + std::to_string(tick) + ": " + what), tick_(tick) {}
  long tick() const { return tick_; }

 private:
  long tick_;
};

RunResult run_simulation(const ScenarioConfig& cfg);

/// Throws Error{EmptyRun} for an empty record set.
MetricsReport compute_metrics(const std::vector<TimeSeriesRecord>& records, double settle_time = 3.0);

struct SweepEntry {
  double mu;
  MetricsReport metrics;
};

/// Independent runs per mu, executed concurrently, returned in input order.
std::vector<SweepEntry> sweep_mu(const ScenarioConfig& cfg, const std::vector<double>& mus);

struct TimingSummary {
  int samples = 0;
  double mean = 0.0;
  double p99 = 0.0;
  double max = 0.0;
  double mean_iterations = 0.0;
  int converged = 0;
};

/// Replays a recorded uL sequence through warm-started sqp_solve.
TimingSummary bench_allocator(const ScenarioConfig& cfg, int samples);
TimingSummary bench_allocator(const std::vector<Vec3>& uL_sequence, int n, double mu,
                              const SqpSettings& settings, int samples);

/// Nearest-rank percentile (p in (0, 100]) of an unsorted sample.
double nearest_rank_percentile(std::vector<double> values, double p);

void write_timeseries_csv(std::ostream& out, const std::vector<TimeSeriesRecord>& records);
std::string metrics_json(const MetricsReport& m);
std::string sweep_json(const std::vector<SweepEntry>& sweep);

/// Writes a handful of SVG line charts next to the CSV.
void write_plots(const std::string& dir, const std::vector<TimeSeriesRecord>& records);

}  // namespace maats
