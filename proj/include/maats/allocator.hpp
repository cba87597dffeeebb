#pragma once

// Cable-tension allocation.
//
// Given the load controller's virtual force uL, pick tensions T_i >= 0 and
// unit directions alpha_i (load -> UAV) with sum_i T_i alpha_i = -uL while
// minimizing
//
//   J = 0.5 sum_i T_i^2 + mu sum_{i<j} (alpha_i' alpha_j)^2 .
//
// The decision vector is stacked as z = [T_1..T_n, alpha_1', .., alpha_n'].

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "maats/math.hpp"

namespace maats {

enum class AllocStatus { Converged, MaxIter, Fallback };
const char* to_string(AllocStatus s);

struct AllocSolution {
  std::vector<double> T;
  std::vector<UnitVec3> alpha;
  double kkt_residual = 0.0;
  int iterations = 0;
  AllocStatus status = AllocStatus::Converged;
  double solve_time = 0.0;  // seconds

  /// Equality multipliers (3 force rows, then n unit-norm rows); empty when
  /// unknown. Reused to seed the Lagrangian Hessian on warm starts.
  Eigen::VectorXd multipliers;

  int n() const { return static_cast<int>(T.size()); }
  Eigen::VectorXd stacked() const;
  /// Unpacks z, normalizing each direction.
  static AllocSolution from_stacked(const Eigen::VectorXd& z);
  /// |sum T_i alpha_i + uL|.
  double force_residual(const Vec3& uL) const;
  double min_pairwise_angle_deg() const;
};

struct AllocProblem {
  Vec3 uL = Vec3::Zero();
  int n = 4;
  double mu = 0.15;
  const AllocSolution* prev = nullptr;  // warm start, owned by the caller
};

enum class HessianModel {
  Exact,        // objective + constraint curvature (Lagrangian)
  GaussNewton,  // objective curvature only
};

struct SqpSettings {
  double kkt_tol = 1e-8;
  int max_iter = 50;
  double hessian_reg_floor = 1e-8;
  double hessian_reg_max = 1e8;
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  double min_step = 1e-10;
  /// The l1 merit penalty is kept at >= penalty_scale * |lambda|_inf + penalty_margin.
  double penalty_scale = 1.1;
  double penalty_margin = 1e-3;
  double initial_cone_deg = 35.0;
  HessianModel hessian = HessianModel::Exact;

  /// Throws Error{InvalidConfig}.
  void validate() const;
};

struct ObjectiveEval {
  double J;
  Eigen::VectorXd grad;
};
ObjectiveEval eval_objective(const Eigen::VectorXd& z, double mu);

struct ConstraintEval {
  Eigen::VectorXd c;    // 3 + n
  Eigen::MatrixXd jac;  // (3 + n) x 4n
};
ConstraintEval constraints(const Eigen::VectorXd& z, const Vec3& uL);

/// Objective Hessian, block-structured.
Eigen::MatrixXd objective_hessian(const Eigen::VectorXd& z, double mu);

/// Hessian of J - lambda' c.
Eigen::MatrixXd lagrangian_hessian(const Eigen::VectorXd& z, double mu,
                                   const Eigen::VectorXd& multipliers);

/// Symmetric cone of half-angle `cone_deg` around -uL with equal tensions
/// carrying the axial load. Throws Error{DegenerateNorm} for |uL| tiny.
AllocSolution initial_guess(const Vec3& uL, int n, double cone_deg = 35.0);

AllocSolution sqp_solve(const AllocProblem& p, const SqpSettings& s = {});

/// Fixed cone of half-angle `cone_deg` around +e3 (world frame), azimuths
/// equally spaced. Minimum-norm tensions with clamp-then-resolve for
/// negatives. Throws Error{BaselineInfeasible}.
AllocSolution baseline_allocate(const Vec3& uL, int n, double cone_deg);

/// Unit directions of a cone of half-angle `cone_deg` around `axis`.
std::vector<UnitVec3> cone_directions(const Vec3& axis, int n, double cone_deg);

}  // namespace maats
