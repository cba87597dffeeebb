#pragma once

// Dense equality-constrained QP with lower bounds on selected variables.
// Equalities are eliminated through a null-space basis, then the bounds are
// handled by a dual (Goldfarb-Idnani) active-set method:
//
//   min 0.5 d'Hd + g'd   s.t.  A d + c = 0,   d[idx_j] >= lower_j
//
// KKT convention: H d + g = A' lambda + sum_j nu_j e_{idx_j}, nu_j >= 0.

#include <Eigen/Core>
#include <vector>

namespace maats {

struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd A;  // may have zero rows
  Eigen::VectorXd c;
  std::vector<int> bound_index;
  Eigen::VectorXd bound_lower;
};

struct QpResult {
  Eigen::VectorXd d;
  Eigen::VectorXd eq_multipliers;
  Eigen::VectorXd bound_multipliers;  // zero for inactive bounds
  std::vector<bool> active;
  int iterations = 0;
};

/// Throws Error{QpInfeasible} when the constraints are inconsistent, the
/// equality rows are rank deficient or the active set cycles, and
/// Error{QpNotConvex} when the reduced Hessian is not positive definite.
/// `initial_active` (optional) marks bounds to try first.
QpResult solve_qp(const QpProblem& qp, std::vector<bool> initial_active = {});

}  // namespace maats
