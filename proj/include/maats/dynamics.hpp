#pragma once

// Coupled point-mass load / rigid massless cable / quadrotor plant.
//
// Cable directions alpha_i point from the load to UAV i, so the UAV sits at
// x_i = xL + L_i alpha_i and a taut cable (T_i > 0) pulls the load along
// +alpha_i and the UAV along -alpha_i:
//
//   m_L aL = -m_L g e3 + sum_i T_i alpha_i
//   m_i a_i = f_i R(q_i) e3 - m_i g e3 - T_i alpha_i
//
// The state holds generalized coordinates (xL, vL, alpha_i, omega_c_i), so the
// cable length is constant by construction and T_i is the constraint force.

#include <vector>

#include "maats/math.hpp"

namespace maats {

struct PlantParams {
  int n = 4;
  double m_load = 0.225;
  std::vector<double> m_uav;        // kg
  std::vector<Vec3> inertia;        // diagonal entries, kg m^2
  std::vector<double> cable_length; // m
  double g = 9.81;

  /// Four quadrotors carrying a 0.225 kg load on 1 m cables.
  static PlantParams defaults(int n = 4);

  /// Throws Error{InvalidConfig} naming the first violated field.
  void validate() const;
};

struct PlantState {
  Vec3 xL = Vec3::Zero();
  Vec3 vL = Vec3::Zero();
  std::vector<UnitVec3> alpha;
  std::vector<Vec3> omega_c;  // alpha_dot = omega_c x alpha, omega_c . alpha = 0
  std::vector<UnitQuat> q;
  std::vector<Vec3> Omega;    // body rates

  int n() const { return static_cast<int>(alpha.size()); }
  bool finite() const;
};

struct PlantInputs {
  std::vector<double> f;    // N
  std::vector<Vec3> tau;    // N m

  static PlantInputs zero(int n) { return {std::vector<double>(n, 0.0), std::vector<Vec3>(n, Vec3::Zero())}; }
};

struct CableForces {
  std::vector<double> T;
  std::vector<bool> slack;
};

struct Accelerations {
  Vec3 aL;
  std::vector<Vec3> alpha_ddot;
  std::vector<Vec3> Omega_dot;
  CableForces forces;
};

/// Eliminates the rigid-link constraint and returns the accelerations and
/// the tensions that realize it.
Accelerations constrained_accelerations(const PlantParams& p, const PlantState& s,
                                        const PlantInputs& u);

/// Classic RK4 with zero-order-hold inputs. Directions and quaternions are
/// renormalized and omega_c re-projected orthogonal to alpha afterwards.
PlantState rk4_step(const PlantParams& p, const PlantState& s, const PlantInputs& u, double dt);

std::vector<Vec3> uav_positions(const PlantParams& p, const PlantState& s);
std::vector<Vec3> uav_velocities(const PlantParams& p, const PlantState& s);

/// Kinetic + gravitational potential energy (rotational kinetic included).
double mechanical_energy(const PlantParams& p, const PlantState& s);

/// |sum_i m_i a_i + m_L aL - (sum_i thrust_i - total weight)|, the internal
/// force balance of the system.
double newton_residual(const PlantParams& p, const PlantState& s, const PlantInputs& u,
                       const Accelerations& acc);

}  // namespace maats
