#pragma once

// Non-allocation layers of the cascade: load virtual force, per-UAV position
// control with attitude-reference extraction, and quaternion attitude
// control. Diagonal gain matrices are stored as their diagonals.

#include <optional>
#include <vector>

#include "maats/dynamics.hpp"
#include "maats/math.hpp"

namespace maats {

inline constexpr double kFlipEpsilon = 1e-6;

struct LoadGains {
  Vec3 kp = Vec3::Constant(8.0);
  Vec3 kd = Vec3::Constant(2.0);
  Vec3 ki = Vec3::Zero();
  double windup_limit = 1.0;  // N, bound on |ki * integral| per axis
};

struct UavGains {
  Vec3 kp = Vec3::Constant(40.0);
  Vec3 kd = Vec3::Constant(10.0);
  Vec3 ki = Vec3::Constant(2.0);
  double windup_limit = 1.0;  // N

  // Attitude loop: critically damped at ~rho rad/s for J = diag(2.1, 1.87, 3.97)e-2.
  Vec3 rho = Vec3::Constant(100.0);
  Vec3 kd_att = Vec3(2.1, 1.87, 3.97);
  Vec3 beta = Vec3(2.1, 1.87, 3.97);
  Vec3 gamma = Vec3::Constant(1.0);
  double sat_limit = 1.0;

  double rate_filter_hz = 50.0;  // low-pass on differentiated references
};

struct ReferencePoint {
  Vec3 xLd = Vec3::Zero();
  Vec3 vLd = Vec3::Zero();
  Vec3 aLd = Vec3::Zero();
};

struct ControlCommand {
  double f_id = 0.0;
  UnitQuat q_id;
  Vec3 Omega_id = Vec3::Zero();
  Vec3 tau = Vec3::Zero();
};

struct LoadControllerState {
  Vec3 integral = Vec3::Zero();
  Vec3 prev_error = Vec3::Zero();
  bool primed = false;
};

struct UavControllerState {
  Vec3 integral = Vec3::Zero();
  Vec3 prev_error = Vec3::Zero();
  bool primed = false;

  std::optional<UnitVec3> prev_uhat;
  Vec3 uhat_rate = Vec3::Zero();  // filtered

  std::optional<UnitQuat> prev_qid;
};

struct ControllerState {
  LoadControllerState load;
  std::vector<UavControllerState> uav;

  static ControllerState initial(int n) { return {LoadControllerState{}, std::vector<UavControllerState>(n)}; }
};

struct LoadControlResult {
  Vec3 uL;
  LoadControllerState state;
};

/// uL = -m_L (g e3 + aLd) + kp eL + kd eL_dot + ki int(eL), eL = xL - xLd.
/// The cables must supply -uL, so the feedback terms restore the load.
LoadControlResult load_control(const LoadGains& g, double m_load, double gravity,
                               const PlantState& s, const ReferencePoint& r,
                               const LoadControllerState& cs, double dt);

struct CableAllocation {
  double T_d = 0.0;
  UnitVec3 alpha_d;
};

struct PositionControlResult {
  ControlCommand cmd;  // tau left at zero
  UavControllerState state;
};

/// Tracks x_id = xLd + L_i alpha_id and extracts thrust, reference attitude
/// (zero yaw) and reference body rate. Throws Error{DegenerateThrust} or
/// Error{AttitudeSingularity}; the caller then holds its previous command.
PositionControlResult position_control(const UavGains& g, const PlantParams& p,
                                       const CableAllocation& alloc, const PlantState& s,
                                       const ReferencePoint& r, const UavControllerState& cs,
                                       int i, double dt);

/// Zero-yaw attitude that rotates e3 onto `uhat`. Throws
/// Error{AttitudeSingularity} when uhat_3 <= -1 + kFlipEpsilon.
UnitQuat attitude_from_thrust(const UnitVec3& uhat);

/// tau = -Kd s - beta sat(gamma s), s = Omega_e + rho q_e, with the
/// quaternion error taken on the short arc.
Vec3 attitude_control(const UavGains& g, const PlantState& s, const ControlCommand& cmd, int i);

}  // namespace maats
