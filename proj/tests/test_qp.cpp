#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "maats/error.hpp"
#include "maats/qp.hpp"

using namespace maats;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double qp_value(const QpProblem& qp, const VectorXd& d) { return 0.5 * d.dot(qp.H * d) + qp.g.dot(d); }

bool qp_feasible(const QpProblem& qp, const VectorXd& d) {
  for (std::size_t j = 0; j < qp.bound_index.size(); ++j) {
    if (d[qp.bound_index[j]] < qp.bound_lower[j] - 1e-12) return false;
  }
  return true;
}

// Brute-force minimizer for three variables and at most one equality row
// (whose last coefficient is nonzero): grid over the free coordinates, then
// repeatedly zoom around the best feasible point.
VectorXd grid_oracle(const QpProblem& qp) {
  const bool eq = qp.A.rows() == 1;
  const int free_dims = eq ? 2 : 3;
  auto lift = [&](const Eigen::Vector3d& y) {
    VectorXd d(3);
    d << y[0], y[1], y[2];
    if (eq) d[2] = -(qp.c[0] + qp.A(0, 0) * y[0] + qp.A(0, 1) * y[1]) / qp.A(0, 2);
    return d;
  };
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double half = 8.0;
  constexpr int kPts = 41;
  double best_val = std::numeric_limits<double>::infinity();
  Eigen::Vector3d best = center;
  for (int round = 0; round < 40; ++round) {
    const double h = 2.0 * half / (kPts - 1);
    for (int i = 0; i < kPts; ++i) {
      for (int j = 0; j < kPts; ++j) {
        for (int k = 0; k < (free_dims == 3 ? kPts : 1); ++k) {
          Eigen::Vector3d y = center + Eigen::Vector3d(-half + i * h, -half + j * h, free_dims == 3 ? -half + k * h : 0.0);
          const VectorXd d = lift(y);
          if (!qp_feasible(qp, d)) continue;
          const double v = qp_value(qp, d);
          if (v < best_val) {
            best_val = v;
            best = y;
          }
        }
      }
    }
    center = best;
    half = 3.0 * h;
  }
  return lift(best);
}

QpProblem random_instance(std::mt19937& rng, bool with_equality) {
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  QpProblem qp;
  MatrixXd M = MatrixXd::NullaryExpr(3, 3, [&] { return nd(rng); });
  qp.H = M * M.transpose() + 0.5 * MatrixXd::Identity(3, 3);
  qp.g = VectorXd::NullaryExpr(3, [&] { return 2.0 * nd(rng); });
  const int nb = 1 + static_cast<int>(rng() % 3);
  for (int j = 0; j < nb; ++j) qp.bound_index.push_back(j);
  qp.bound_lower = VectorXd::NullaryExpr(nb, [&] { return ud(rng); });
  if (with_equality) {
    // the equality passes through a point that satisfies every bound
    VectorXd feasible = VectorXd::NullaryExpr(3, [&] { return ud(rng); });
    for (int j = 0; j < nb; ++j) feasible[j] = qp.bound_lower[j] + 0.5 * (1.0 + ud(rng));
    qp.A = MatrixXd(1, 3);
    qp.A << ud(rng), ud(rng), 0.5 + std::abs(ud(rng));
    qp.c = -qp.A * feasible;
  } else {
    qp.A = MatrixXd(0, 3);
    qp.c = VectorXd(0);
  }
  return qp;
}

void check_kkt(const QpProblem& qp, const QpResult& r) {
  VectorXd stat = qp.H * r.d + qp.g - qp.A.transpose() * r.eq_multipliers;
  for (std::size_t j = 0; j < qp.bound_index.size(); ++j) {
    stat[qp.bound_index[j]] -= r.bound_multipliers[j];
    CHECK(r.bound_multipliers[j] >= -1e-10);
    const double gap = r.d[qp.bound_index[j]] - qp.bound_lower[j];
    CHECK(gap >= -1e-10);
    CHECK(std::abs(gap * r.bound_multipliers[j]) < 1e-10);
  }
  CHECK(stat.norm() < 1e-10);
  if (qp.A.rows() > 0) CHECK((qp.A * r.d + qp.c).norm() < 1e-10);
}

}  // namespace

TEST_CASE("unconstrained identity") {
  QpProblem qp{MatrixXd::Identity(3, 3), VectorXd::Zero(3), MatrixXd(0, 3), VectorXd(0), {}, VectorXd(0)};
  const QpResult r = solve_qp(qp);
  CHECK(r.d.norm() == 0.0);
}

TEST_CASE("single equality multiplier") {
  QpProblem qp;
  qp.H = MatrixXd::Identity(3, 3);
  qp.g = VectorXd::Unit(3, 0);
  qp.A = MatrixXd(1, 3);
  qp.A << 1, 0, 0;
  qp.c = VectorXd::Zero(1);
  qp.bound_lower = VectorXd(0);
  const QpResult r = solve_qp(qp);
  CHECK(r.d.norm() < 1e-15);
  CHECK(r.eq_multipliers[0] == doctest::Approx(1.0));
}

TEST_CASE("one active bound") {
  // min 0.5 |d|^2 + d0  s.t. d0 >= 0  ->  d = 0 with bound multiplier 1
  QpProblem qp;
  qp.H = MatrixXd::Identity(2, 2);
  qp.g = VectorXd::Unit(2, 0);
  qp.A = MatrixXd(0, 2);
  qp.c = VectorXd(0);
  qp.bound_index = {0};
  qp.bound_lower = VectorXd::Zero(1);
  const QpResult r = solve_qp(qp);
  CHECK(r.d.norm() < 1e-15);
  CHECK(r.bound_multipliers[0] == doctest::Approx(1.0));
  CHECK(r.active[0]);
  check_kkt(qp, r);
}

TEST_CASE("random convex instances match the grid oracle") {
  std::mt19937 rng(101);
  for (int k = 0; k < 40; ++k) {
    const QpProblem qp = random_instance(rng, k % 2 == 0);
    const QpResult r = solve_qp(qp);
    check_kkt(qp, r);
    const VectorXd oracle = grid_oracle(qp);
    CHECK(std::abs(qp_value(qp, r.d) - qp_value(qp, oracle)) < 1e-4);
    CHECK((r.d - oracle).norm() < 1e-4);
  }
}

TEST_CASE("warm working set gives the same answer") {
  std::mt19937 rng(103);
  for (int k = 0; k < 20; ++k) {
    const QpProblem qp = random_instance(rng, true);
    const QpResult cold = solve_qp(qp);
    const QpResult warm = solve_qp(qp, cold.active);
    CHECK((warm.d - cold.d).norm() < 1e-12);
    CHECK(warm.iterations <= cold.iterations);
  }
}

TEST_CASE("errors") {
  SUBCASE("indefinite reduced Hessian") {
    QpProblem qp{-MatrixXd::Identity(2, 2), VectorXd::Zero(2), MatrixXd(0, 2), VectorXd(0), {}, VectorXd(0)};
    try {
      solve_qp(qp);
      FAIL("expected QpNotConvex");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::QpNotConvex);
    }
  }
  SUBCASE("inconsistent equalities") {
    QpProblem qp;
    qp.H = MatrixXd::Identity(2, 2);
    qp.g = VectorXd::Zero(2);
    qp.A = MatrixXd(2, 2);
    qp.A << 1, 0, 1, 0;
    qp.c = VectorXd(2);
    qp.c << 0, 1;
    qp.bound_lower = VectorXd(0);
    try {
      solve_qp(qp);
      FAIL("expected QpInfeasible");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::QpInfeasible);
    }
  }
  SUBCASE("equality contradicts a bound") {
    QpProblem qp;
    qp.H = MatrixXd::Identity(2, 2);
    qp.g = VectorXd::Zero(2);
    qp.A = MatrixXd(1, 2);
    qp.A << 1, 0;
    qp.c = VectorXd::Constant(1, 1.0);  // d0 = -1
    qp.bound_index = {0};
    qp.bound_lower = VectorXd::Zero(1);  // d0 >= 0
    CHECK_THROWS_AS(solve_qp(qp), Error);
  }
}
