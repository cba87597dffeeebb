#include "maats/qp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <cmath>
#include <limits>

#include "maats/error.hpp"

namespace maats {

namespace {

// Equalities eliminated: d = d0 + Z y with A d0 + c = 0 and A Z = 0.
struct Reduction {
  Eigen::VectorXd d0;
  Eigen::MatrixXd Y, Z, R;  // A' = [Y Z] [R; 0] P'
  Eigen::PermutationMatrix<Eigen::Dynamic> P;
};

Reduction eliminate_equalities(const QpProblem& qp) {
  const Eigen::Index nv = qp.H.rows();
  const Eigen::Index m = qp.A.rows();
  Reduction red;
  if (m == 0) {
    red.d0 = Eigen::VectorXd::Zero(nv);
    red.Z = Eigen::MatrixXd::Identity(nv, nv);
    return red;
  }
  if (m > nv) throw Error(ErrorCode::QpInfeasible, "more equality constraints than variables");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(qp.A.transpose());
  qr.setThreshold(1e-11);
  if (qr.rank() < m) throw Error(ErrorCode::QpInfeasible, "equality constraints are rank deficient");
  const Eigen::MatrixXd Q = qr.householderQ();
  red.Y = Q.leftCols(m);
  red.Z = Q.rightCols(nv - m);
  red.R = qr.matrixR().topLeftCorner(m, m).triangularView<Eigen::Upper>();
  red.P = qr.colsPermutation();
  // A = P R' Y'  =>  R' w = -P' c
  const Eigen::VectorXd w =
      red.R.triangularView<Eigen::Upper>().transpose().solve(-(red.P.transpose() * qp.c));
  red.d0 = red.Y * w;
  return red;
}

}  // namespace

// Goldfarb-Idnani dual active-set method on the reduced problem
//   min 0.5 y'My + q'y  s.t.  G_j y >= h_j
// starting from the unconstrained minimizer; `initial_active` constraints
// are preferred when choosing which violated constraint to add.
QpResult solve_qp(const QpProblem& qp, std::vector<bool> initial_active) {
  const int nb = static_cast<int>(qp.bound_index.size());
  const Reduction red = eliminate_equalities(qp);
  const Eigen::Index nr = red.Z.cols();

  const Eigen::MatrixXd M = red.Z.transpose() * qp.H * red.Z;
  const Eigen::VectorXd q = red.Z.transpose() * (qp.g + qp.H * red.d0);
  Eigen::MatrixXd G(nb, nr);
  Eigen::VectorXd h(nb);
  for (int j = 0; j < nb; ++j) {
    G.row(j) = red.Z.row(qp.bound_index[j]);
    h(j) = qp.bound_lower(j) - red.d0(qp.bound_index[j]);
  }

  Eigen::MatrixXd Minv = Eigen::MatrixXd::Zero(nr, nr);
  if (nr > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::QpNotConvex, "reduced Hessian not positive definite");
    }
    Minv = llt.solve(Eigen::MatrixXd::Identity(nr, nr));
  }

  const bool hinted = initial_active.size() == static_cast<std::size_t>(nb);
  const double scale = 1.0 + qp.g.cwiseAbs().maxCoeff() + (qp.A.rows() ? qp.c.cwiseAbs().maxCoeff() : 0.0) +
                       (nb ? qp.bound_lower.cwiseAbs().maxCoeff() : 0.0);
  const double tol = 1e-12 * scale;

  Eigen::VectorXd y = -Minv * q;
  std::vector<int> active;  // constraint indices, linearly independent rows of G
  std::vector<double> u;    // their multipliers
  std::vector<bool> in_active(nb, false);
  int iterations = 0;
  const int max_iter = 10 * (nb + static_cast<int>(nr)) + 10;

  auto drop = [&](std::size_t k) {
    in_active[active[k]] = false;
    active.erase(active.begin() + static_cast<long>(k));
    u.erase(u.begin() + static_cast<long>(k));
  };

  while (true) {
    // pick a violated constraint, hinted ones first
    int p = -1;
    double worst = -tol;
    bool worst_hinted = false;
    for (int j = 0; j < nb; ++j) {
      if (in_active[j]) continue;
      const double s = G.row(j).dot(y) - h(j);
      if (s >= -tol) continue;
      const bool hint = hinted && initial_active[j];
      if ((hint && !worst_hinted) || (hint == worst_hinted && s < worst)) {
        p = j;
        worst = s;
        worst_hinted = hint;
      }
    }
    if (p < 0) break;

    double u_p = 0.0;
    while (true) {
      if (++iterations > max_iter) throw Error(ErrorCode::QpInfeasible, "active set did not settle");
      const Eigen::VectorXd np = G.row(p).transpose();
      const Eigen::Index na = static_cast<Eigen::Index>(active.size());
      Eigen::VectorXd z = Minv * np;
      Eigen::VectorXd r = Eigen::VectorXd::Zero(na);
      if (na > 0) {
        Eigen::MatrixXd N(nr, na);
        for (Eigen::Index k = 0; k < na; ++k) N.col(k) = G.row(active[k]).transpose();
        const Eigen::MatrixXd MinvN = Minv * N;
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(N.transpose() * MinvN);
        r = ldlt.solve(MinvN.transpose() * np);
        z -= MinvN * r;
      }

      // largest dual step keeping the active multipliers nonnegative
      double t_dual = std::numeric_limits<double>::infinity();
      std::size_t blocking = 0;
      for (std::size_t k = 0; k < active.size(); ++k) {
        if (r(static_cast<Eigen::Index>(k)) > tol && u[k] / r(static_cast<Eigen::Index>(k)) < t_dual) {
          t_dual = u[k] / r(static_cast<Eigen::Index>(k));
          blocking = k;
        }
      }

      const double curvature = z.dot(np);
      if (curvature <= 1e-14 * (1.0 + np.squaredNorm())) {
        // np depends on the active rows: only a dual step is possible
        if (!std::isfinite(t_dual)) throw Error(ErrorCode::QpInfeasible, "bound constraints are inconsistent");
        for (std::size_t k = 0; k < active.size(); ++k) u[k] -= t_dual * r(static_cast<Eigen::Index>(k));
        u_p += t_dual;
        drop(blocking);
        continue;
      }

      const double t_full = -(G.row(p).dot(y) - h(p)) / curvature;
      const double t = std::min(t_full, t_dual);
      y += t * z;
      for (std::size_t k = 0; k < active.size(); ++k) u[k] -= t * r(static_cast<Eigen::Index>(k));
      u_p += t;
      if (t_full <= t_dual) {
        active.push_back(p);
        u.push_back(u_p);
        in_active[p] = true;
        break;
      }
      drop(blocking);
    }
  }

  QpResult res;
  res.d = red.d0 + red.Z * y;
  res.bound_multipliers = Eigen::VectorXd::Zero(nb);
  for (std::size_t k = 0; k < active.size(); ++k) res.bound_multipliers(active[k]) = std::max(0.0, u[k]);
  res.active = in_active;
  res.iterations = std::max(1, iterations);

  // H d + g = A' lambda + sum nu_j e_{idx_j}
  if (qp.A.rows() > 0) {
    Eigen::VectorXd rhs = qp.H * res.d + qp.g;
    for (int j = 0; j < nb; ++j) rhs(qp.bound_index[j]) -= res.bound_multipliers(j);
    const Eigen::VectorXd w = red.R.triangularView<Eigen::Upper>().solve(red.Y.transpose() * rhs);
    res.eq_multipliers = red.P * w;
  } else {
    res.eq_multipliers.resize(0);
  }
  return res;
}

}  // namespace maats
