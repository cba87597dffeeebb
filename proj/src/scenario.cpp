#include "maats/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace maats {

using nlohmann::json;

const char* to_string(AllocatorKind k) { return k == AllocatorKind::Sqp ? "sqp" : "baseline"; }
const char* to_string(TrajectoryKind k) { return k == TrajectoryKind::Spiral ? "spiral" : "hover"; }

bool operator==(const LoadGains& a, const LoadGains& b) {
  return a.kp == b.kp && a.kd == b.kd && a.ki == b.ki && a.windup_limit == b.windup_limit;
}

bool operator==(const UavGains& a, const UavGains& b) {
  return a.kp == b.kp && a.kd == b.kd && a.ki == b.ki && a.windup_limit == b.windup_limit &&
         a.rho == b.rho && a.kd_att == b.kd_att && a.beta == b.beta && a.gamma == b.gamma &&
         a.sat_limit == b.sat_limit && a.rate_filter_hz == b.rate_filter_hz;
}

bool operator==(const SqpSettings& a, const SqpSettings& b) {
  return a.kkt_tol == b.kkt_tol && a.max_iter == b.max_iter &&
         a.hessian_reg_floor == b.hessian_reg_floor && a.hessian_reg_max == b.hessian_reg_max &&
         a.armijo_c == b.armijo_c && a.backtrack_factor == b.backtrack_factor &&
         a.min_step == b.min_step && a.penalty_scale == b.penalty_scale &&
         a.penalty_margin == b.penalty_margin && a.initial_cone_deg == b.initial_cone_deg &&
         a.hessian == b.hessian;
}

bool operator==(const AllocatorConfig& a, const AllocatorConfig& b) {
  return a.kind == b.kind && a.mu == b.mu && a.sqp == b.sqp &&
         a.baseline_cone_deg == b.baseline_cone_deg;
}

bool operator==(const PlantParams& a, const PlantParams& b) {
  return a.n == b.n && a.m_load == b.m_load && a.m_uav == b.m_uav && a.inertia == b.inertia &&
         a.cable_length == b.cable_length && a.g == b.g;
}

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) {
  return a.plant == b.plant && a.load_gains == b.load_gains && a.uav_gains == b.uav_gains &&
         a.alloc == b.alloc && a.trajectory == b.trajectory && a.duration == b.duration &&
         a.dt == b.dt && a.output == b.output;
}

namespace {

[[noreturn]] void invalid(const std::string& key, const std::string& why) {
  throw Error(ErrorCode::InvalidConfig, key + ": " + why);
}

// Reads members of one JSON object and tracks which keys were consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_null() && !j_.is_object()) invalid(path_, "expected an object");
  }

  /// Rejects keys that no reader asked for.
  void done() const {
    if (j_.is_null()) return;
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) invalid(key_path(key), "unknown key");
    }
  }

  Section child(const std::string& key) {
    static const json missing;
    seen_.insert(key);
    return Section(j_.is_object() && j_.contains(key) ? j_.at(key) : missing, key_path(key));
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) invalid(key_path(key), "expected a number");
      out = v->get<double>();
    }
  }

  void integer(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) invalid(key_path(key), "expected an integer");
      out = v->get<int>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) invalid(key_path(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  /// Scalar broadcast to all three axes, or an explicit 3-array.
  void vec3(const std::string& key, Vec3& out) {
    if (const json* v = find(key)) out = parse_vec3(*v, key_path(key));
  }

  /// Scalar broadcast to n entries, or an array of exactly n numbers.
  void per_agent(const std::string& key, int n, std::vector<double>& out) {
    const json* v = find(key);
    if (!v) {
      if (!out.empty()) out.assign(n, out.front());
      return;
    }
    if (v->is_number()) {
      out.assign(n, v->get<double>());
    } else if (v->is_array()) {
      if (v->size() != static_cast<std::size_t>(n)) {
        invalid(key_path(key), "expected " + std::to_string(n) + " entries, got " + std::to_string(v->size()));
      }
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number()) invalid(key_path(key), "entries must be numbers");
        out.push_back(e.get<double>());
      }
    } else {
      invalid(key_path(key), "expected a number or an array");
    }
  }

  /// One 3-vector broadcast to n entries, or an array of n 3-vectors.
  void per_agent_vec3(const std::string& key, int n, std::vector<Vec3>& out) {
    const json* v = find(key);
    if (!v) {
      if (!out.empty()) out.assign(n, out.front());
      return;
    }
    if (v->is_array() && !v->empty() && (*v)[0].is_array()) {
      if (v->size() != static_cast<std::size_t>(n)) {
        invalid(key_path(key), "expected " + std::to_string(n) + " entries, got " + std::to_string(v->size()));
      }
      out.clear();
      for (const auto& e : *v) out.push_back(parse_vec3(e, key_path(key)));
    } else {
      out.assign(n, parse_vec3(*v, key_path(key)));
    }
  }

 private:
  const json* find(const std::string& key) {
    seen_.insert(key);
    if (!j_.is_object() || !j_.contains(key)) return nullptr;
    return &j_.at(key);
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  static Vec3 parse_vec3(const json& v, const std::string& path) {
    if (v.is_number()) return Vec3::Constant(v.get<double>());
    if (!v.is_array() || v.size() != 3) invalid(path, "expected a number or a 3-element array");
    Vec3 out;
    for (int k = 0; k < 3; ++k) {
      if (!v[k].is_number()) invalid(path, "entries must be numbers");
      out[k] = v[k].get<double>();
    }
    return out;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

void ScenarioConfig::validate() const {
  plant.validate();
  auto positive = [](const Vec3& v, const char* key, bool allow_zero = false) {
    if (!(allow_zero ? v.minCoeff() >= 0.0 : v.minCoeff() > 0.0)) {
      invalid(key, allow_zero ? "entries must be >= 0" : "entries must be > 0");
    }
  };
  positive(load_gains.kp, "gains.load.kp");
  positive(load_gains.kd, "gains.load.kd");
  positive(load_gains.ki, "gains.load.ki", true);
  if (!(load_gains.windup_limit > 0.0)) invalid("gains.load.windup_limit", "must be > 0");
  positive(uav_gains.kp, "gains.uav.kp");
  positive(uav_gains.kd, "gains.uav.kd");
  positive(uav_gains.ki, "gains.uav.ki", true);
  positive(uav_gains.rho, "gains.uav.rho");
  positive(uav_gains.kd_att, "gains.uav.kd_att");
  positive(uav_gains.beta, "gains.uav.beta");
  positive(uav_gains.gamma, "gains.uav.gamma");
  if (!(uav_gains.windup_limit > 0.0)) invalid("gains.uav.windup_limit", "must be > 0");
  if (!(uav_gains.sat_limit > 0.0)) invalid("gains.uav.sat_limit", "must be > 0");
  if (!(uav_gains.rate_filter_hz > 0.0)) invalid("gains.uav.rate_filter_hz", "must be > 0");
  if (!(alloc.mu >= 0.0)) invalid("alloc.mu", "must be >= 0");
  if (!(alloc.baseline_cone_deg >= 0.0 && alloc.baseline_cone_deg < 90.0)) {
    invalid("alloc.baseline_cone_deg", "must be in [0, 90)");
  }
  alloc.sqp.validate();
  if (!(trajectory.radius >= 0.0)) invalid("trajectory.radius", "must be >= 0");
  if (!std::isfinite(trajectory.angular_rate)) invalid("trajectory.angular_rate", "must be finite");
  if (!std::isfinite(trajectory.climb_rate)) invalid("trajectory.climb_rate", "must be finite");
  if (!trajectory.center.allFinite()) invalid("trajectory.center", "must be finite");
  if (!(dt > 0.0)) invalid("dt", "must be > 0");
  if (!(duration >= dt)) invalid("duration", "must be >= dt");
}

ScenarioConfig load_config(const std::string& text) {
  json doc;
  try {
    doc = text.find_first_not_of(" \t\r\n") == std::string::npos ? json::object() : json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed JSON: ") + e.what());
  }

  ScenarioConfig cfg;
  {
    Section root(doc, "");
    {
      Section plant = root.child("plant");
      plant.integer("n", cfg.plant.n);
      if (cfg.plant.n < 1) invalid("plant.n", "must be >= 1");
      plant.number("m_L", cfg.plant.m_load);
      plant.number("g", cfg.plant.g);
      plant.per_agent("m_i", cfg.plant.n, cfg.plant.m_uav);
      plant.per_agent("L_i", cfg.plant.n, cfg.plant.cable_length);
      plant.per_agent_vec3("J_i", cfg.plant.n, cfg.plant.inertia);
      plant.done();
    }
    {
      Section gains = root.child("gains");
      {
        Section load = gains.child("load");
        load.vec3("kp", cfg.load_gains.kp);
        load.vec3("kd", cfg.load_gains.kd);
        load.vec3("ki", cfg.load_gains.ki);
        load.number("windup_limit", cfg.load_gains.windup_limit);
        load.done();
      }
      {
        Section uav = gains.child("uav");
        uav.vec3("kp", cfg.uav_gains.kp);
        uav.vec3("kd", cfg.uav_gains.kd);
        uav.vec3("ki", cfg.uav_gains.ki);
        uav.number("windup_limit", cfg.uav_gains.windup_limit);
        uav.vec3("rho", cfg.uav_gains.rho);
        uav.vec3("kd_att", cfg.uav_gains.kd_att);
        uav.vec3("beta", cfg.uav_gains.beta);
        uav.vec3("gamma", cfg.uav_gains.gamma);
        uav.number("sat_limit", cfg.uav_gains.sat_limit);
        uav.number("rate_filter_hz", cfg.uav_gains.rate_filter_hz);
        uav.done();
      }
      gains.done();
    }
    {
      Section alloc = root.child("alloc");
      std::string kind = to_string(cfg.alloc.kind);
      alloc.string("kind", kind);
      if (kind == "sqp") cfg.alloc.kind = AllocatorKind::Sqp;
      else if (kind == "baseline") cfg.alloc.kind = AllocatorKind::Baseline;
      else invalid("alloc.kind", "expected \"sqp\" or \"baseline\", got \"" + kind + "\"");
      alloc.number("mu", cfg.alloc.mu);
      alloc.number("baseline_cone_deg", cfg.alloc.baseline_cone_deg);
      SqpSettings& s = cfg.alloc.sqp;
      alloc.number("kkt_tol", s.kkt_tol);
      alloc.integer("max_iter", s.max_iter);
      alloc.number("hessian_reg_floor", s.hessian_reg_floor);
      alloc.number("hessian_reg_max", s.hessian_reg_max);
      alloc.number("armijo_c", s.armijo_c);
      alloc.number("backtrack_factor", s.backtrack_factor);
      alloc.number("min_step", s.min_step);
      alloc.number("penalty_scale", s.penalty_scale);
      alloc.number("penalty_margin", s.penalty_margin);
      alloc.number("initial_cone_deg", s.initial_cone_deg);
      std::string hessian = s.hessian == HessianModel::Exact ? "exact" : "gauss_newton";
      alloc.string("hessian", hessian);
      if (hessian == "exact") s.hessian = HessianModel::Exact;
      else if (hessian == "gauss_newton") s.hessian = HessianModel::GaussNewton;
      else invalid("alloc.hessian", "expected \"exact\" or \"gauss_newton\"");
      alloc.done();
    }
    {
      Section traj = root.child("trajectory");
      std::string kind = to_string(cfg.trajectory.kind);
      traj.string("kind", kind);
      if (kind == "spiral") cfg.trajectory.kind = TrajectoryKind::Spiral;
      else if (kind == "hover") cfg.trajectory.kind = TrajectoryKind::Hover;
      else invalid("trajectory.kind", "expected \"spiral\" or \"hover\", got \"" + kind + "\"");
      traj.number("radius", cfg.trajectory.radius);
      traj.number("angular_rate", cfg.trajectory.angular_rate);
      traj.number("climb_rate", cfg.trajectory.climb_rate);
      traj.vec3("center", cfg.trajectory.center);
      traj.number("phase", cfg.trajectory.phase);
      traj.done();
    }
    root.number("duration", cfg.duration);
    root.number("dt", cfg.dt);
    {
      Section out = root.child("output");
      out.string("dir", cfg.output.dir);
      out.string("timeseries", cfg.output.timeseries);
      out.string("metrics", cfg.output.metrics);
      out.string("sweep", cfg.output.sweep);
      out.done();
    }
    root.done();
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_config(ss.str());
}

std::string serialize_config(const ScenarioConfig& cfg) {
  json j;
  json inertia = json::array();
  for (const Vec3& J : cfg.plant.inertia) inertia.push_back(to_json(J));
  j["plant"] = {{"n", cfg.plant.n},          {"m_L", cfg.plant.m_load},
                {"g", cfg.plant.g},          {"m_i", cfg.plant.m_uav},
                {"L_i", cfg.plant.cable_length}, {"J_i", inertia}};
  const LoadGains& lg = cfg.load_gains;
  const UavGains& ug = cfg.uav_gains;
  j["gains"]["load"] = {{"kp", to_json(lg.kp)}, {"kd", to_json(lg.kd)}, {"ki", to_json(lg.ki)},
                        {"windup_limit", lg.windup_limit}};
  j["gains"]["uav"] = {{"kp", to_json(ug.kp)},         {"kd", to_json(ug.kd)},
                       {"ki", to_json(ug.ki)},         {"windup_limit", ug.windup_limit},
                       {"rho", to_json(ug.rho)},       {"kd_att", to_json(ug.kd_att)},
                       {"beta", to_json(ug.beta)},     {"gamma", to_json(ug.gamma)},
                       {"sat_limit", ug.sat_limit},    {"rate_filter_hz", ug.rate_filter_hz}};
  const SqpSettings& s = cfg.alloc.sqp;
  j["alloc"] = {{"kind", to_string(cfg.alloc.kind)},
                {"mu", cfg.alloc.mu},
                {"baseline_cone_deg", cfg.alloc.baseline_cone_deg},
                {"kkt_tol", s.kkt_tol},
                {"max_iter", s.max_iter},
                {"hessian_reg_floor", s.hessian_reg_floor},
                {"hessian_reg_max", s.hessian_reg_max},
                {"armijo_c", s.armijo_c},
                {"backtrack_factor", s.backtrack_factor},
                {"min_step", s.min_step},
                {"penalty_scale", s.penalty_scale},
                {"penalty_margin", s.penalty_margin},
                {"initial_cone_deg", s.initial_cone_deg},
                {"hessian", s.hessian == HessianModel::Exact ? "exact" : "gauss_newton"}};
  const TrajectoryParams& t = cfg.trajectory;
  j["trajectory"] = {{"kind", to_string(t.kind)},     {"radius", t.radius},
                     {"angular_rate", t.angular_rate}, {"climb_rate", t.climb_rate},
                     {"center", to_json(t.center)},    {"phase", t.phase}};
  j["duration"] = cfg.duration;
  j["dt"] = cfg.dt;
  j["output"] = {{"dir", cfg.output.dir},
                 {"timeseries", cfg.output.timeseries},
                 {"metrics", cfg.output.metrics},
                 {"sweep", cfg.output.sweep}};
  return j.dump(2);
}

ReferencePoint spiral_reference(const TrajectoryParams& tp, double t) {
  const double r = tp.radius;
  const double w = tp.angular_rate;
  const double th = w * t + tp.phase;
  const double c = std::cos(th);
  const double s = std::sin(th);
  ReferencePoint ref;
  ref.xLd = tp.center + Vec3(r * c, r * s, tp.climb_rate * t);
  ref.vLd = Vec3(-r * w * s, r * w * c, tp.climb_rate);
  ref.aLd = Vec3(-r * w * w * c, -r * w * w * s, 0.0);
  return ref;
}

ReferencePoint reference_at(const TrajectoryParams& tp, double t) {
  if (tp.kind == TrajectoryKind::Hover) return ReferencePoint{tp.center, Vec3::Zero(), Vec3::Zero()};
  return spiral_reference(tp, t);
}

PlantState initial_state(const ScenarioConfig& cfg) {
  const int n = cfg.plant.n;
  const ReferencePoint r0 = reference_at(cfg.trajectory, 0.0);
  PlantState s;
  s.xL = r0.xLd;
  s.vL = r0.vLd;
  s.alpha = cone_directions(e3(), n, cfg.alloc.sqp.initial_cone_deg);
  s.omega_c.assign(n, Vec3::Zero());
  s.q.assign(n, UnitQuat::identity());
  s.Omega.assign(n, Vec3::Zero());
  return s;
}

}  // namespace maats
