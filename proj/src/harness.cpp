#include "maats/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace maats {

namespace {

ControlCommand hover_command(const PlantParams& p, int i) {
  ControlCommand c;
  c.f_id = (p.m_uav[i] + p.m_load / p.n) * p.g;
  return c;
}

AllocSolution allocate(const ScenarioConfig& cfg, const Vec3& uL, const AllocSolution* last_good) {
  const int n = cfg.plant.n;
  if (cfg.alloc.kind == AllocatorKind::Sqp) {
    return sqp_solve(AllocProblem{uL, n, cfg.alloc.mu, last_good}, cfg.alloc.sqp);
  }
  try {
    return baseline_allocate(uL, n, cfg.alloc.baseline_cone_deg);
  } catch (const Error&) {
    AllocSolution held = last_good ? *last_good : initial_guess(uL, n, cfg.alloc.baseline_cone_deg);
    held.status = AllocStatus::Fallback;
    return held;
  }
}

}  // namespace

RunResult run_simulation(const ScenarioConfig& cfg) {
  cfg.validate();
  const PlantParams& p = cfg.plant;
  const int n = p.n;
  const double dt = cfg.dt;
  const long steps = std::max(1L, std::lround(cfg.duration / dt));

  PlantState state = initial_state(cfg);
  ControllerState cs = ControllerState::initial(n);
  std::vector<ControlCommand> last_cmd;
  for (int i = 0; i < n; ++i) last_cmd.push_back(hover_command(p, i));

  std::optional<AllocSolution> last_good;
  RunResult result;
  result.records.reserve(static_cast<std::size_t>(steps));
  result.uL_history.reserve(static_cast<std::size_t>(steps));

  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const ReferencePoint ref = reference_at(cfg.trajectory, t);

    const LoadControlResult lc = load_control(cfg.load_gains, p.m_load, p.g, state, ref, cs.load, dt);
    cs.load = lc.state;
    result.uL_history.push_back(lc.uL);

    const AllocSolution alloc = allocate(cfg, lc.uL, last_good ? &*last_good : nullptr);
    if (alloc.status != AllocStatus::Fallback) last_good = alloc;

    PlantInputs u = PlantInputs::zero(n);
    for (int i = 0; i < n; ++i) {
      ControlCommand cmd = last_cmd[i];
      try {
        const PositionControlResult pc =
            position_control(cfg.uav_gains, p, CableAllocation{alloc.T[i], alloc.alpha[i]}, state,
                             ref, cs.uav[i], i, dt);
        cmd = pc.cmd;
        cs.uav[i] = pc.state;
      } catch (const Error&) {
        // hold the previous command for this cycle
      }
      cmd.tau = attitude_control(cfg.uav_gains, state, cmd, i);
      last_cmd[i] = cmd;
      u.f[i] = cmd.f_id;
      u.tau[i] = cmd.tau;
    }

    const Accelerations acc = constrained_accelerations(p, state, u);
    result.max_newton_residual = std::max(result.max_newton_residual, newton_residual(p, state, u, acc));

    TimeSeriesRecord rec;
    rec.t = t;
    rec.xL = state.xL;
    rec.xLd = ref.xLd;
    rec.eL = state.xL - ref.xLd;
    rec.T_actual = acc.forces.T;
    rec.T_desired = alloc.T;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) rec.angles_deg.push_back(angle_deg(state.alpha[i], state.alpha[j]));
    }
    rec.f_id = u.f;
    rec.iterations = alloc.iterations;
    rec.status = alloc.status;
    rec.solve_time = alloc.solve_time;
    rec.slack = acc.forces.slack;
    result.records.push_back(std::move(rec));

    try {
      state = rk4_step(p, state, u, dt);
    } catch (const Error& e) {
      throw SimulationDiverged(k, e.what());
    }
    if (!state.finite()) throw SimulationDiverged(k, "plant state became non-finite");
  }

  result.metrics = compute_metrics(result.records);
  return result;
}

double nearest_rank_percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

MetricsReport compute_metrics(const std::vector<TimeSeriesRecord>& records, double settle_time) {
  if (records.empty()) throw Error(ErrorCode::EmptyRun, "no records to summarize");
  const std::size_t n = records.front().T_actual.size();
  const double count = static_cast<double>(records.size());

  MetricsReport m;
  m.ticks = static_cast<int>(records.size());
  m.settle_time = settle_time;
  m.min_pairwise_angle = 180.0;
  m.tension_mean.assign(n, 0.0);
  m.tension_max.assign(n, -std::numeric_limits<double>::infinity());
  std::vector<double> track_err(n, 0.0), track_ref(n, 0.0);
  std::vector<double> solve_times;
  solve_times.reserve(records.size());

  double sq_err = 0.0;
  double total_sum = 0.0;
  double spread_sum = 0.0;
  double iter_sum = 0.0;
  double prev_total = 0.0;

  for (std::size_t k = 0; k < records.size(); ++k) {
    const TimeSeriesRecord& r = records[k];
    const double e = r.eL.norm();
    sq_err += e * e;
    m.max_error = std::max(m.max_error, e);
    for (double a : r.angles_deg) m.min_pairwise_angle = std::min(m.min_pairwise_angle, a);

    double total = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
      const double T = r.T_actual[i];
      total += std::abs(T);
      m.tension_mean[i] += T / count;
      m.tension_max[i] = std::max(m.tension_max[i], T);
      lo = std::min(lo, T);
      hi = std::max(hi, T);
      if (r.t >= settle_time) {
        track_err[i] += std::abs(T - r.T_desired[i]);
        track_ref[i] += std::abs(T);
      }
    }
    if (k > 0) m.J_T += 0.5 * (prev_total + total) * (r.t - records[k - 1].t);
    prev_total = total;
    total_sum += total;
    m.peak_total_tension = std::max(m.peak_total_tension, total);
    spread_sum += hi - lo;

    solve_times.push_back(r.solve_time);
    iter_sum += r.iterations;
    if (r.status == AllocStatus::Fallback) ++m.fallback_count;
    if (std::any_of(r.slack.begin(), r.slack.end(), [](bool b) { return b; })) ++m.slack_events;
  }

  m.rms_error = std::sqrt(sq_err / count);
  m.mean_total_tension = total_sum / count;
  m.peak_to_mean_ratio = m.mean_total_tension > 0.0 ? m.peak_total_tension / m.mean_total_tension : 0.0;
  m.mean_tension_spread = spread_sum / count;
  m.tension_tracking_relative.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (track_ref[i] > 0.0) m.tension_tracking_relative[i] = track_err[i] / track_ref[i];
  }
  m.mean_iterations = iter_sum / count;
  double time_sum = 0.0;
  for (double s : solve_times) time_sum += s;
  m.solver_time_mean = time_sum / count;
  m.solver_time_max = *std::max_element(solve_times.begin(), solve_times.end());
  m.solver_time_p99 = nearest_rank_percentile(std::move(solve_times), 99.0);
  return m;
}

std::vector<SweepEntry> sweep_mu(const ScenarioConfig& cfg, const std::vector<double>& mus) {
  if (mus.empty()) throw Error(ErrorCode::InvalidConfig, "sweep needs at least one mu value");
  std::vector<std::future<MetricsReport>> jobs;
  for (double mu : mus) {
    ScenarioConfig c = cfg;
    c.alloc.mu = mu;
    jobs.push_back(std::async(std::launch::async, [c] { return run_simulation(c).metrics; }));
  }
  std::vector<SweepEntry> out;
  for (std::size_t k = 0; k < mus.size(); ++k) {
    try {
      out.push_back({mus[k], jobs[k].get()});
    } catch (const Error& e) {
      throw Error(e.code(), "mu=" + std::to_string(mus[k]) + ": " + e.what());
    }
  }
  return out;
}

TimingSummary bench_allocator(const std::vector<Vec3>& seq, int n, double mu,
                              const SqpSettings& settings, int samples) {
  TimingSummary ts;
  if (seq.empty() || samples < 1) return ts;
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(samples));
  std::optional<AllocSolution> prev;
  double iter_sum = 0.0;
  const long len = static_cast<long>(seq.size());
  for (int k = 0; k < samples; ++k) {
    // ping-pong through the recording so the replayed sequence stays continuous
    const long period = len > 1 ? 2 * (len - 1) : 1;
    const long phase = k % period;
    const Vec3& uL = seq[static_cast<std::size_t>(phase < len ? phase : period - phase)];
    AllocSolution sol = sqp_solve(AllocProblem{uL, n, mu, prev ? &*prev : nullptr}, settings);
    times.push_back(sol.solve_time);
    iter_sum += sol.iterations;
    if (sol.status == AllocStatus::Converged) ++ts.converged;
    if (sol.status != AllocStatus::Fallback) prev = std::move(sol);
  }
  ts.samples = samples;
  double sum = 0.0;
  for (double t : times) sum += t;
  ts.mean = sum / samples;
  ts.max = *std::max_element(times.begin(), times.end());
  ts.p99 = nearest_rank_percentile(std::move(times), 99.0);
  ts.mean_iterations = iter_sum / samples;
  return ts;
}

TimingSummary bench_allocator(const ScenarioConfig& cfg, int samples) {
  ScenarioConfig c = cfg;
  c.alloc.kind = AllocatorKind::Sqp;
  const RunResult run = run_simulation(c);
  return bench_allocator(run.uL_history, c.plant.n, c.alloc.mu, c.alloc.sqp, samples);
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

void write_timeseries_csv(std::ostream& out, const std::vector<TimeSeriesRecord>& records) {
  if (records.empty()) return;
  const std::size_t n = records.front().T_actual.size();
  out << "t,xL_x,xL_y,xL_z,xLd_x,xLd_y,xLd_z,eL_x,eL_y,eL_z";
  for (std::size_t i = 0; i < n; ++i) out << ",T_actual_" << i + 1;
  for (std::size_t i = 0; i < n; ++i) out << ",T_desired_" << i + 1;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) out << ",theta_" << i + 1 << "_" << j + 1;
  }
  for (std::size_t i = 0; i < n; ++i) out << ",f_" << i + 1;
  out << ",iterations,status,solve_time";
  for (std::size_t i = 0; i < n; ++i) out << ",slack_" << i + 1;
  out << '\n';

  for (const TimeSeriesRecord& r : records) {
    out << fmt(r.t);
    for (const Vec3* v : {&r.xL, &r.xLd, &r.eL}) {
      for (int k = 0; k < 3; ++k) out << ',' << fmt((*v)[k]);
    }
    for (double x : r.T_actual) out << ',' << fmt(x);
    for (double x : r.T_desired) out << ',' << fmt(x);
    for (double x : r.angles_deg) out << ',' << fmt(x);
    for (double x : r.f_id) out << ',' << fmt(x);
    out << ',' << r.iterations << ',' << to_string(r.status) << ',' << fmt(r.solve_time);
    for (bool b : r.slack) out << ',' << (b ? 1 : 0);
    out << '\n';
  }
}

namespace {

nlohmann::json metrics_to_json(const MetricsReport& m) {
  return {{"ticks", m.ticks},
          {"rms_error", m.rms_error},
          {"max_error", m.max_error},
          {"min_pairwise_angle", m.min_pairwise_angle},
          {"J_T", m.J_T},
          {"tension_mean", m.tension_mean},
          {"tension_max", m.tension_max},
          {"peak_total_tension", m.peak_total_tension},
          {"mean_total_tension", m.mean_total_tension},
          {"peak_to_mean_ratio", m.peak_to_mean_ratio},
          {"mean_tension_spread", m.mean_tension_spread},
          {"tension_tracking_relative", m.tension_tracking_relative},
          {"settle_time", m.settle_time},
          {"solver_time_mean", m.solver_time_mean},
          {"solver_time_p99", m.solver_time_p99},
          {"solver_time_max", m.solver_time_max},
          {"mean_iterations", m.mean_iterations},
          {"fallback_count", m.fallback_count},
          {"slack_events", m.slack_events}};
}

}  // namespace

std::string metrics_json(const MetricsReport& m) { return metrics_to_json(m).dump(2); }

std::string sweep_json(const std::vector<SweepEntry>& sweep) {
  nlohmann::json arr = nlohmann::json::array();
  for (const SweepEntry& e : sweep) arr.push_back({{"mu", e.mu}, {"metrics", metrics_to_json(e.metrics)}});
  return arr.dump(2);
}

namespace {

void svg_chart(const std::filesystem::path& path, const std::string& title, const std::string& y_label,
               const std::vector<double>& t, const std::vector<std::vector<double>>& series) {
  constexpr double W = 800, H = 400, L = 60, R = 20, T = 40, B = 40;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : series) {
    for (double v : s) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(hi > lo)) hi = lo + 1.0;
  const double t0 = t.front();
  const double t1 = t.back() > t0 ? t.back() : t0 + 1.0;
  const std::size_t stride = std::max<std::size_t>(1, t.size() / 2000);
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

  std::ofstream out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n"
      << "<text x=\"14\" y=\"" << H / 2 << "\" font-size=\"12\" transform=\"rotate(-90 14 " << H / 2
      << ")\" text-anchor=\"middle\">" << y_label << "</text>\n"
      << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
      << "\" fill=\"none\" stroke=\"black\"/>\n"
      << "<text x=\"" << L << "\" y=\"" << H - 20 << "\" font-size=\"11\">" << fmt(t0) << " s</text>\n"
      << "<text x=\"" << W - R << "\" y=\"" << H - 20 << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(t1)
      << " s</text>\n"
      << "<text x=\"" << L - 4 << "\" y=\"" << T + 10 << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(hi)
      << "</text>\n"
      << "<text x=\"" << L - 4 << "\" y=\"" << H - B << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(lo)
      << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    out << "<polyline fill=\"none\" stroke-width=\"1\" stroke=\"" << colors[s % 6] << "\" points=\"";
    for (std::size_t k = 0; k < t.size(); k += stride) {
      const double x = L + (t[k] - t0) / (t1 - t0) * (W - L - R);
      const double y = T + (hi - series[s][k]) / (hi - lo) * (H - T - B);
      out << fmt(x) << ',' << fmt(y) << ' ';
    }
    out << "\"/>\n";
  }
  out << "</svg>\n";
}

}  // namespace

void write_plots(const std::string& dir, const std::vector<TimeSeriesRecord>& records) {
  if (records.empty()) return;
  const std::filesystem::path base(dir);
  const std::size_t n = records.front().T_actual.size();
  const std::size_t pairs = records.front().angles_deg.size();
  std::vector<double> t;
  std::vector<std::vector<double>> err(3), tension(n), desired(n), angles(pairs);
  for (const auto& r : records) {
    t.push_back(r.t);
    for (int k = 0; k < 3; ++k) err[k].push_back(r.eL[k]);
    for (std::size_t i = 0; i < n; ++i) {
      tension[i].push_back(r.T_actual[i]);
      desired[i].push_back(r.T_desired[i]);
    }
    for (std::size_t p = 0; p < pairs; ++p) angles[p].push_back(r.angles_deg[p]);
  }
  svg_chart(base / "position_error.svg", "Load position error", "m", t, err);
  svg_chart(base / "cable_tensions.svg", "Cable tensions (actual)", "N", t, tension);
  svg_chart(base / "desired_tensions.svg", "Cable tensions (desired)", "N", t, desired);
  svg_chart(base / "cable_angles.svg", "Pairwise cable angles", "deg", t, angles);
}

}  // namespace maats
