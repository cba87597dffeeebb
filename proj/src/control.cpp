#include "maats/control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace maats {

namespace {

Vec3 clamp_integral(const Vec3& integral, const Vec3& ki, double windup_limit) {
  Vec3 out;
  for (int k = 0; k < 3; ++k) {
    const double bound = ki[k] > 0.0 ? windup_limit / ki[k] : windup_limit;
    out[k] = std::clamp(integral[k], -bound, bound);
  }
  return out;
}

// Trapezoidal integral; the first sample only primes the previous error.
void advance_integral(Vec3& integral, Vec3& prev, bool& primed, const Vec3& error,
                      const Vec3& ki, double windup_limit, double dt) {
  if (primed) integral = clamp_integral(integral + 0.5 * dt * (prev + error), ki, windup_limit);
  prev = error;
  primed = true;
}

double lowpass_gain(double cutoff_hz, double dt) {
  const double tc = 1.0 / (2.0 * std::numbers::pi * cutoff_hz);
  return dt / (dt + tc);
}

}  // namespace

LoadControlResult load_control(const LoadGains& g, double m_load, double gravity,
                               const PlantState& s, const ReferencePoint& r,
                               const LoadControllerState& cs, double dt) {
  LoadControlResult out{Vec3::Zero(), cs};
  const Vec3 e = s.xL - r.xLd;
  const Vec3 e_dot = s.vL - r.vLd;
  advance_integral(out.state.integral, out.state.prev_error, out.state.primed, e, g.ki,
                   g.windup_limit, dt);
  out.uL = -m_load * (gravity * e3() + r.aLd) + g.kp.cwiseProduct(e) + g.kd.cwiseProduct(e_dot) +
           g.ki.cwiseProduct(out.state.integral);
  return out;
}

UnitQuat attitude_from_thrust(const UnitVec3& uhat) {
  if (uhat.z() <= -1.0 + kFlipEpsilon) {
    throw Error(ErrorCode::AttitudeSingularity, "thrust direction points downward");
  }
  const double root = std::sqrt(2.0 * uhat.z() + 2.0);
  return UnitQuat::from_components(0.5 * root, Vec3(-uhat.y() / root, uhat.x() / root, 0.0));
}

PositionControlResult position_control(const UavGains& g, const PlantParams& p,
                                       const CableAllocation& alloc, const PlantState& s,
                                       const ReferencePoint& r, const UavControllerState& cs,
                                       int i, double dt) {
  PositionControlResult out{ControlCommand{}, cs};
  UavControllerState& st = out.state;
  const double L = p.cable_length[i];
  const double m = p.m_uav[i];
  const Vec3& alpha_d = alloc.alpha_d.dir();
  const double a = lowpass_gain(g.rate_filter_hz, dt);

  // quasi-static: alpha_d is not differentiated
  const Vec3 x_d = r.xLd + L * alpha_d;
  const Vec3 v_d = r.vLd;
  const Vec3 x = s.xL + L * s.alpha[i].dir();
  const Vec3 v = s.vL + L * s.omega_c[i].cross(s.alpha[i].dir());
  const Vec3 e = x - x_d;
  const Vec3 e_dot = v - v_d;
  advance_integral(st.integral, st.prev_error, st.primed, e, g.ki, g.windup_limit, dt);

  // The cable pulls the UAV along -alpha_i; the feedforward compensates it.
  const Vec3 u = m * (p.g * e3() + r.aLd) + alloc.T_d * alpha_d - g.kp.cwiseProduct(e) -
                 g.kd.cwiseProduct(e_dot) - g.ki.cwiseProduct(st.integral);

  const auto uhat = try_normalize(u);
  if (!uhat) throw Error(ErrorCode::DegenerateThrust, "virtual force vanished");
  UnitQuat q_d = attitude_from_thrust(*uhat);
  if (st.prev_qid && st.prev_qid->eta * q_d.eta + st.prev_qid->eps.dot(q_d.eps) < 0.0) {
    q_d = q_d.negated();
  }
  st.prev_qid = q_d;

  if (st.prev_uhat) {
    const Vec3 raw = (uhat->dir() - st.prev_uhat->dir()) / dt;
    st.uhat_rate += a * (raw - st.uhat_rate);
  }
  st.prev_uhat = *uhat;

  out.cmd.f_id = u.norm();
  out.cmd.q_id = q_d;
  // angular velocity of the thrust axis, mapped into the reference body frame
  out.cmd.Omega_id = quat_rotate(q_d.conjugate(), uhat->dir().cross(st.uhat_rate));
  return out;
}

Vec3 attitude_control(const UavGains& g, const PlantState& s, const ControlCommand& cmd, int i) {
  UnitQuat q_e = quat_mul(cmd.q_id.conjugate(), s.q[i]);
  if (q_e.eta < 0.0) q_e = q_e.negated();
  const Vec3 w_e = s.Omega[i] - cmd.Omega_id;
  const Vec3 sigma = w_e + g.rho.cwiseProduct(q_e.eps);
  const Vec3 sat = g.gamma.cwiseProduct(sigma).cwiseMax(-g.sat_limit).cwiseMin(g.sat_limit);
  return -g.kd_att.cwiseProduct(sigma) - g.beta.cwiseProduct(sat);
}

}  // namespace maats
