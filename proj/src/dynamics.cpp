#include "maats/dynamics.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <string>

namespace maats {

PlantParams PlantParams::defaults(int n) {
  PlantParams p;
  p.n = n;
  p.m_load = 0.225;
  p.m_uav.assign(n, 0.5);
  p.inertia.assign(n, Vec3(2.1e-2, 1.87e-2, 3.97e-2));
  p.cable_length.assign(n, 1.0);
  p.g = 9.81;
  return p;
}

void PlantParams::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw Error(ErrorCode::InvalidConfig, "plant." + key + ": " + why);
  };
  if (n < 1) fail("n", "must be >= 1");
  if (!(m_load > 0.0)) fail("m_L", "must be > 0");
  if (!(g > 0.0)) fail("g", "must be > 0");
  const auto sz = static_cast<std::size_t>(n);
  if (m_uav.size() != sz) fail("m_i", "expected " + std::to_string(n) + " entries");
  if (inertia.size() != sz) fail("J_i", "expected " + std::to_string(n) + " entries");
  if (cable_length.size() != sz) fail("L_i", "expected " + std::to_string(n) + " entries");
  for (std::size_t i = 0; i < sz; ++i) {
    if (!(m_uav[i] > 0.0)) fail("m_i", "entry " + std::to_string(i) + " must be > 0");
    if (!(cable_length[i] > 0.0)) fail("L_i", "entry " + std::to_string(i) + " must be > 0");
    if (!(inertia[i].minCoeff() > 0.0)) fail("J_i", "entry " + std::to_string(i) + " must be > 0");
  }
}

bool PlantState::finite() const {
  if (!xL.allFinite() || !vL.allFinite()) return false;
  for (int i = 0; i < n(); ++i) {
    if (!alpha[i].dir().allFinite() || !omega_c[i].allFinite()) return false;
    if (!std::isfinite(q[i].eta) || !q[i].eps.allFinite() || !Omega[i].allFinite()) return false;
  }
  return true;
}

Accelerations constrained_accelerations(const PlantParams& p, const PlantState& s,
                                        const PlantInputs& u) {
  const int n = s.n();
  Mat3 mass = p.m_load * Mat3::Identity();
  Vec3 rhs = -p.m_load * p.g * e3();

  std::vector<Vec3> F(n);
  std::vector<double> centripetal(n);
  for (int i = 0; i < n; ++i) {
    const Vec3& a = s.alpha[i].dir();
    F[i] = u.f[i] * quat_rotate(s.q[i], e3()) - p.m_uav[i] * p.g * e3();
    // |alpha_dot|^2 = |omega_c|^2 while omega_c is orthogonal to alpha
    centripetal[i] = p.m_uav[i] * p.cable_length[i] * s.omega_c[i].cross(a).squaredNorm();
    mass += p.m_uav[i] * a * a.transpose();
    rhs += a * (a.dot(F[i]) + centripetal[i]);
  }

  Eigen::LLT<Mat3> llt(mass);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularMassMatrix, "load mass matrix is not positive definite");
  }

  Accelerations out;
  out.aL = llt.solve(rhs);
  if (!out.aL.allFinite()) {
    throw Error(ErrorCode::SingularMassMatrix, "non-finite load acceleration");
  }
  out.alpha_ddot.resize(n);
  out.Omega_dot.resize(n);
  out.forces.T.resize(n);
  out.forces.slack.resize(n);
  for (int i = 0; i < n; ++i) {
    const Vec3& a = s.alpha[i].dir();
    const double T = a.dot(F[i]) - p.m_uav[i] * a.dot(out.aL) + centripetal[i];
    out.forces.T[i] = T;
    out.forces.slack[i] = T < 0.0;
    out.alpha_ddot[i] = ((F[i] - T * a) / p.m_uav[i] - out.aL) / p.cable_length[i];

    const Vec3& J = p.inertia[i];
    const Vec3& w = s.Omega[i];
    out.Omega_dot[i] = (u.tau[i] - w.cross(J.cwiseProduct(w))).cwiseQuotient(J);
  }
  return out;
}

namespace {

// Unconstrained container used for RK4 stage arithmetic.
struct RawState {
  Vec3 xL, vL;
  std::vector<Vec3> alpha, omega_c, Omega;
  std::vector<Eigen::Vector4d> q;
};

RawState to_raw(const PlantState& s) {
  RawState r;
  r.xL = s.xL;
  r.vL = s.vL;
  for (int i = 0; i < s.n(); ++i) {
    r.alpha.push_back(s.alpha[i].dir());
    r.omega_c.push_back(s.omega_c[i]);
    r.Omega.push_back(s.Omega[i]);
    r.q.emplace_back(s.q[i].eta, s.q[i].eps.x(), s.q[i].eps.y(), s.q[i].eps.z());
  }
  return r;
}

PlantState from_raw(const RawState& r) {
  PlantState s;
  s.xL = r.xL;
  s.vL = r.vL;
  const std::size_t n = r.alpha.size();
  s.alpha.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const UnitVec3 a(r.alpha[i]);
    s.alpha.push_back(a);
    s.omega_c.push_back(r.omega_c[i] - r.omega_c[i].dot(a.dir()) * a.dir());
    s.q.push_back(UnitQuat::from_components(r.q[i][0], r.q[i].tail<3>()));
    s.Omega.push_back(r.Omega[i]);
  }
  return s;
}

RawState derivative(const PlantParams& p, const RawState& r, const PlantInputs& u) {
  const PlantState s = from_raw(r);
  const Accelerations acc = constrained_accelerations(p, s, u);
  RawState d;
  d.xL = s.vL;
  d.vL = acc.aL;
  for (int i = 0; i < s.n(); ++i) {
    const Vec3& a = s.alpha[i].dir();
    d.alpha.push_back(s.omega_c[i].cross(a));
    d.omega_c.push_back(a.cross(acc.alpha_ddot[i]));
    d.Omega.push_back(acc.Omega_dot[i]);
    const QuatRate qr = quat_kinematics(s.q[i], s.Omega[i]);
    d.q.emplace_back(qr.eta, qr.eps.x(), qr.eps.y(), qr.eps.z());
  }
  return d;
}

RawState axpy(const RawState& x, double h, const RawState& d) {
  RawState r = x;
  r.xL += h * d.xL;
  r.vL += h * d.vL;
  for (std::size_t i = 0; i < x.alpha.size(); ++i) {
    r.alpha[i] += h * d.alpha[i];
    r.omega_c[i] += h * d.omega_c[i];
    r.Omega[i] += h * d.Omega[i];
    r.q[i] += h * d.q[i];
  }
  return r;
}

}  // namespace

PlantState rk4_step(const PlantParams& p, const PlantState& s, const PlantInputs& u, double dt) {
  const RawState x = to_raw(s);
  const RawState k1 = derivative(p, x, u);
  const RawState k2 = derivative(p, axpy(x, 0.5 * dt, k1), u);
  const RawState k3 = derivative(p, axpy(x, 0.5 * dt, k2), u);
  const RawState k4 = derivative(p, axpy(x, dt, k3), u);

  RawState next = x;
  const double w = dt / 6.0;
  next = axpy(next, w, k1);
  next = axpy(next, 2.0 * w, k2);
  next = axpy(next, 2.0 * w, k3);
  next = axpy(next, w, k4);
  return from_raw(next);
}

std::vector<Vec3> uav_positions(const PlantParams& p, const PlantState& s) {
  std::vector<Vec3> x(s.n());
  for (int i = 0; i < s.n(); ++i) x[i] = s.xL + p.cable_length[i] * s.alpha[i].dir();
  return x;
}

std::vector<Vec3> uav_velocities(const PlantParams& p, const PlantState& s) {
  std::vector<Vec3> v(s.n());
  for (int i = 0; i < s.n(); ++i) {
    v[i] = s.vL + p.cable_length[i] * s.omega_c[i].cross(s.alpha[i].dir());
  }
  return v;
}

double mechanical_energy(const PlantParams& p, const PlantState& s) {
  double e = 0.5 * p.m_load * s.vL.squaredNorm() + p.m_load * p.g * s.xL.z();
  const auto x = uav_positions(p, s);
  const auto v = uav_velocities(p, s);
  for (int i = 0; i < s.n(); ++i) {
    e += 0.5 * p.m_uav[i] * v[i].squaredNorm() + p.m_uav[i] * p.g * x[i].z();
    e += 0.5 * s.Omega[i].dot(p.inertia[i].cwiseProduct(s.Omega[i]));
  }
  return e;
}

double newton_residual(const PlantParams& p, const PlantState& s, const PlantInputs& u,
                       const Accelerations& acc) {
  Vec3 momentum_rate = p.m_load * acc.aL;
  Vec3 external = -p.m_load * p.g * e3();
  for (int i = 0; i < s.n(); ++i) {
    momentum_rate += p.m_uav[i] * (acc.aL + p.cable_length[i] * acc.alpha_ddot[i]);
    external += u.f[i] * quat_rotate(s.q[i], e3()) - p.m_uav[i] * p.g * e3();
  }
  return (momentum_rate - external).norm();
}

}  // namespace maats
