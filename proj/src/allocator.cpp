#include "maats/allocator.hpp"

#include <Eigen/QR>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "maats/qp.hpp"

namespace maats {

const char* to_string(AllocStatus s) {
  switch (s) {
    case AllocStatus::Converged: return "converged";
    case AllocStatus::MaxIter: return "max_iter";
    case AllocStatus::Fallback: return "fallback";
  }
  return "unknown";
}

namespace {

int count_from_size(Eigen::Index size) { return static_cast<int>(size / 4); }

Vec3 dir_block(const Eigen::VectorXd& z, int n, int i) { return z.segment<3>(n + 3 * i); }

double radians(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

Eigen::VectorXd AllocSolution::stacked() const {
  const int n_ = n();
  Eigen::VectorXd z(4 * n_);
  for (int i = 0; i < n_; ++i) {
    z(i) = T[i];
    z.segment<3>(n_ + 3 * i) = alpha[i].dir();
  }
  return z;
}

AllocSolution AllocSolution::from_stacked(const Eigen::VectorXd& z) {
  const int n_ = count_from_size(z.size());
  AllocSolution s;
  for (int i = 0; i < n_; ++i) {
    s.T.push_back(z(i));
    s.alpha.emplace_back(dir_block(z, n_, i));
  }
  return s;
}

double AllocSolution::force_residual(const Vec3& uL) const {
  Vec3 r = uL;
  for (int i = 0; i < n(); ++i) r += T[i] * alpha[i].dir();
  return r.norm();
}

double AllocSolution::min_pairwise_angle_deg() const {
  double m = 180.0;
  for (int i = 0; i < n(); ++i) {
    for (int j = i + 1; j < n(); ++j) m = std::min(m, angle_deg(alpha[i], alpha[j]));
  }
  return m;
}

void SqpSettings::validate() const {
  auto fail = [](const char* key) {
    throw Error(ErrorCode::InvalidConfig, std::string("alloc.") + key + ": out of range");
  };
  if (!(kkt_tol > 0.0)) fail("kkt_tol");
  if (max_iter < 1) fail("max_iter");
  if (!(hessian_reg_floor > 0.0)) fail("hessian_reg_floor");
  if (!(hessian_reg_max >= hessian_reg_floor)) fail("hessian_reg_max");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) fail("armijo_c");
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) fail("backtrack_factor");
  if (!(min_step > 0.0)) fail("min_step");
  if (!(penalty_scale >= 1.0)) fail("penalty_scale");
  if (!(penalty_margin > 0.0)) fail("penalty_margin");
  if (!(initial_cone_deg >= 0.0 && initial_cone_deg < 90.0)) fail("initial_cone_deg");
}

ObjectiveEval eval_objective(const Eigen::VectorXd& z, double mu) {
  const int n = count_from_size(z.size());
  ObjectiveEval out{0.0, Eigen::VectorXd::Zero(z.size())};
  for (int i = 0; i < n; ++i) {
    out.J += 0.5 * z(i) * z(i);
    out.grad(i) = z(i);
  }
  for (int i = 0; i < n; ++i) {
    const Vec3 ai = dir_block(z, n, i);
    for (int j = i + 1; j < n; ++j) {
      const Vec3 aj = dir_block(z, n, j);
      const double c = ai.dot(aj);
      out.J += mu * c * c;
      out.grad.segment<3>(n + 3 * i) += 2.0 * mu * c * aj;
      out.grad.segment<3>(n + 3 * j) += 2.0 * mu * c * ai;
    }
  }
  return out;
}

ConstraintEval constraints(const Eigen::VectorXd& z, const Vec3& uL) {
  const int n = count_from_size(z.size());
  ConstraintEval out{Eigen::VectorXd::Zero(3 + n), Eigen::MatrixXd::Zero(3 + n, 4 * n)};
  Vec3 force = uL;
  for (int i = 0; i < n; ++i) {
    const Vec3 a = dir_block(z, n, i);
    force += z(i) * a;
    out.jac.block<3, 1>(0, i) = a;
    out.jac.block<3, 3>(0, n + 3 * i) = z(i) * Mat3::Identity();
    out.c(3 + i) = a.squaredNorm() - 1.0;
    out.jac.block<1, 3>(3 + i, n + 3 * i) = 2.0 * a.transpose();
  }
  out.c.head<3>() = force;
  return out;
}

Eigen::MatrixXd objective_hessian(const Eigen::VectorXd& z, double mu) {
  const int n = count_from_size(z.size());
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(4 * n, 4 * n);
  H.topLeftCorner(n, n).setIdentity();
  for (int i = 0; i < n; ++i) {
    const Vec3 ai = dir_block(z, n, i);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const Vec3 aj = dir_block(z, n, j);
      H.block<3, 3>(n + 3 * i, n + 3 * i) += 2.0 * mu * aj * aj.transpose();
      H.block<3, 3>(n + 3 * i, n + 3 * j) =
          2.0 * mu * (ai.dot(aj) * Mat3::Identity() + aj * ai.transpose());
    }
  }
  return H;
}

Eigen::MatrixXd lagrangian_hessian(const Eigen::VectorXd& z, double mu,
                                   const Eigen::VectorXd& lambda) {
  const int n = count_from_size(z.size());
  Eigen::MatrixXd H = objective_hessian(z, mu);
  if (lambda.size() != 3 + n) return H;
  for (int i = 0; i < n; ++i) {
    // force rows: d2/dT_i dalpha_i,k of T_i alpha_i,k is 1
    for (int k = 0; k < 3; ++k) {
      H(i, n + 3 * i + k) -= lambda(k);
      H(n + 3 * i + k, i) -= lambda(k);
    }
    H.block<3, 3>(n + 3 * i, n + 3 * i) -= 2.0 * lambda(3 + i) * Mat3::Identity();
  }
  return H;
}

std::vector<UnitVec3> cone_directions(const Vec3& axis, int n, double cone_deg) {
  const UnitVec3 a(axis);
  const Vec3 ref = std::abs(a.dir().dot(Vec3::UnitX())) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 b1 = (ref - ref.dot(a.dir()) * a.dir()).normalized();
  const Vec3 b2 = a.dir().cross(b1);
  const double half = n == 1 ? 0.0 : radians(cone_deg);
  std::vector<UnitVec3> dirs;
  dirs.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double az = 2.0 * std::numbers::pi * i / n;
    dirs.emplace_back(std::cos(half) * a.dir() +
                      std::sin(half) * (std::cos(az) * b1 + std::sin(az) * b2));
  }
  return dirs;
}

AllocSolution initial_guess(const Vec3& uL, int n, double cone_deg) {
  const double mag = uL.norm();
  if (!(mag > kNormEpsilon)) throw Error(ErrorCode::DegenerateNorm, "initial_guess needs |uL| > 0");
  AllocSolution s;
  s.alpha = cone_directions(-uL, n, cone_deg);
  const double half = n == 1 ? 0.0 : radians(cone_deg);
  s.T.assign(n, mag / (n * std::cos(half)));
  s.status = AllocStatus::Converged;
  return s;
}

namespace {

// alpha_i <- alpha_i / |alpha_i|, T_i <- T_i |alpha_i|: exact unit norm with
// each cable's force vector T_i alpha_i unchanged.
Eigen::VectorXd project(Eigen::VectorXd z) {
  const int n = count_from_size(z.size());
  for (int i = 0; i < n; ++i) {
    const double s = z.segment<3>(n + 3 * i).norm();
    if (s > kNormEpsilon) {
      z.segment<3>(n + 3 * i) /= s;
      z(i) *= s;
    }
    z(i) = std::max(z(i), 0.0);
  }
  return z;
}

Eigen::VectorXd least_squares_multipliers(const Eigen::MatrixXd& jac, const Eigen::VectorXd& grad) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(jac.transpose());
  return qr.solve(grad);
}

AllocSolution fallback_solution(const AllocProblem& p, const SqpSettings& s) {
  AllocSolution out;
  if (p.prev && p.prev->n() == p.n) {
    out = *p.prev;
  } else if (p.uL.norm() > kNormEpsilon) {
    out = initial_guess(p.uL, p.n, s.initial_cone_deg);
  } else {
    out.alpha = cone_directions(e3(), p.n, s.initial_cone_deg);
    out.T.assign(p.n, 0.0);
  }
  out.status = AllocStatus::Fallback;
  return out;
}

}  // namespace

AllocSolution sqp_solve(const AllocProblem& p, const SqpSettings& s) {
  const auto start = std::chrono::steady_clock::now();
  auto finish = [&](AllocSolution sol) {
    sol.solve_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return sol;
  };

  const int n = p.n;
  const bool warm = p.prev && p.prev->n() == n && p.prev->status != AllocStatus::Fallback;
  if (!warm && !(p.uL.norm() > kNormEpsilon)) return finish(fallback_solution(p, s));

  Eigen::VectorXd z = warm ? p.prev->stacked() : initial_guess(p.uL, n, s.initial_cone_deg).stacked();
  Eigen::VectorXd lambda;
  if (warm && p.prev->multipliers.size() == 3 + n) lambda = p.prev->multipliers;

  std::vector<int> bound_index(n);
  for (int i = 0; i < n; ++i) bound_index[i] = i;
  std::vector<bool> active;
  double penalty = 0.0;
  double kkt = std::numeric_limits<double>::infinity();

  auto merit = [&](const Eigen::VectorXd& x) {
    return eval_objective(x, p.mu).J + penalty * constraints(x, p.uL).c.lpNorm<1>();
  };

  for (int iter = 1; iter <= s.max_iter; ++iter) {
    const ObjectiveEval obj = eval_objective(z, p.mu);
    const ConstraintEval con = constraints(z, p.uL);
    if (lambda.size() != 3 + n) lambda = least_squares_multipliers(con.jac, obj.grad);

    const Eigen::MatrixXd H0 = s.hessian == HessianModel::Exact
                                   ? lagrangian_hessian(z, p.mu, lambda)
                                   : objective_hessian(z, p.mu);

    QpProblem qp;
    qp.g = obj.grad;
    qp.A = con.jac;
    qp.c = con.c;
    qp.bound_index = bound_index;
    qp.bound_lower = -z.head(n);

    QpResult step;
    bool solved = false;
    try {
      for (double tau = s.hessian_reg_floor; tau <= s.hessian_reg_max; tau *= 100.0) {
        qp.H = H0 + tau * Eigen::MatrixXd::Identity(4 * n, 4 * n);
        try {
          step = solve_qp(qp, active);
          solved = true;
          break;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::QpNotConvex) throw;
        }
      }
    } catch (const Error&) {
      solved = false;
    }
    if (!solved) return finish(fallback_solution(p, s));
    active = step.active;
    lambda = step.eq_multipliers;

    Eigen::VectorXd stationarity = obj.grad - con.jac.transpose() * lambda;
    stationarity.head(n) -= step.bound_multipliers;
    double comp = 0.0;
    for (int i = 0; i < n; ++i) comp = std::max(comp, std::abs(step.bound_multipliers(i) * z(i)));
    kkt = std::max({stationarity.lpNorm<Eigen::Infinity>(), con.c.lpNorm<Eigen::Infinity>(), comp});

    if (kkt <= s.kkt_tol) {
      AllocSolution out = AllocSolution::from_stacked(z);
      out.kkt_residual = kkt;
      out.iterations = iter;
      out.status = AllocStatus::Converged;
      out.multipliers = lambda;
      return finish(std::move(out));
    }

    penalty = std::max(penalty, s.penalty_scale * lambda.lpNorm<Eigen::Infinity>() + s.penalty_margin);
    const double phi0 = obj.J + penalty * con.c.lpNorm<1>();
    const double slope = std::min(0.0, obj.grad.dot(step.d) - penalty * con.c.lpNorm<1>());
    const bool tiny = step.d.lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + z.lpNorm<Eigen::Infinity>());

    // Armijo with a roundoff allowance on phi: near the solution the predicted
    // decrease drops below what phi can resolve.
    const double roundoff = 10.0 * std::numeric_limits<double>::epsilon() * std::abs(phi0);
    double t = 1.0;
    Eigen::VectorXd trial = project(z + step.d);
    while (!tiny && merit(trial) > phi0 + s.armijo_c * t * slope + roundoff) {
      t *= s.backtrack_factor;
      if (t < s.min_step) return finish(fallback_solution(p, s));
      trial = project(z + t * step.d);
    }
    z = std::move(trial);
  }

  AllocSolution out = AllocSolution::from_stacked(z);
  out.kkt_residual = kkt;
  out.iterations = s.max_iter;
  out.status = AllocStatus::MaxIter;
  out.multipliers = lambda;
  return finish(std::move(out));
}

AllocSolution baseline_allocate(const Vec3& uL, int n, double cone_deg) {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<UnitVec3> dirs = cone_directions(e3(), n, cone_deg);
  const double tol = 1e-9 * std::max(1.0, uL.norm());

  std::vector<bool> support(n, true);
  Eigen::VectorXd T = Eigen::VectorXd::Zero(n);
  for (int round = 0; round <= n; ++round) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i) {
      if (support[i]) idx.push_back(i);
    }
    if (idx.empty()) break;
    Eigen::MatrixXd D(3, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) D.col(static_cast<Eigen::Index>(k)) = dirs[idx[k]].dir();
    const Eigen::VectorXd sub = D.completeOrthogonalDecomposition().solve(Eigen::Vector3d(-uL));
    T.setZero();
    bool clamped = false;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (sub(static_cast<Eigen::Index>(k)) < 0.0) {
        support[idx[k]] = false;
        clamped = true;
      } else {
        T(idx[k]) = sub(static_cast<Eigen::Index>(k));
      }
    }
    if (!clamped) break;
    T.setZero();
  }

  AllocSolution out;
  out.alpha = dirs;
  out.T.assign(T.data(), T.data() + n);
  if (out.force_residual(uL) > tol) {
    throw Error(ErrorCode::BaselineInfeasible, "fixed cable pattern cannot produce the demanded force");
  }
  out.status = AllocStatus::Converged;
  out.iterations = 1;
  out.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace maats
