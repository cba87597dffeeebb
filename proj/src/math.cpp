#include "maats/math.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace maats {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateNorm: return "DegenerateNorm";
    case ErrorCode::SingularMassMatrix: return "SingularMassMatrix";
    case ErrorCode::DegenerateThrust: return "DegenerateThrust";
    case ErrorCode::AttitudeSingularity: return "AttitudeSingularity";
    case ErrorCode::QpInfeasible: return "QpInfeasible";
    case ErrorCode::QpNotConvex: return "QpNotConvex";
    case ErrorCode::BaselineInfeasible: return "BaselineInfeasible";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::EmptyRun: return "EmptyRun";
  }
  return "Unknown";
}

UnitVec3::UnitVec3(const Vec3& v) {
  const double n = v.norm();
  if (!(n > kNormEpsilon)) {
    throw Error(ErrorCode::DegenerateNorm, "vector norm below threshold");
  }
  dir_ = v / n;
}

UnitQuat UnitQuat::from_axis_angle(const Vec3& axis, double angle) {
  const UnitVec3 a(axis);
  return from_components(std::cos(0.5 * angle), std::sin(0.5 * angle) * a.dir());
}

UnitQuat UnitQuat::from_components(double eta, const Vec3& eps) {
  const double n = std::sqrt(eta * eta + eps.squaredNorm());
  if (!(n > kNormEpsilon)) {
    throw Error(ErrorCode::DegenerateNorm, "quaternion norm below threshold");
  }
  return {eta / n, eps / n};
}

Mat3 UnitQuat::rotation_matrix() const {
  // R = (eta^2 - eps.eps) I + 2 eps eps^T + 2 eta [eps]x
  return (eta * eta - eps.squaredNorm()) * Mat3::Identity() + 2.0 * eps * eps.transpose() +
         2.0 * eta * skew(eps);
}

UnitQuat quat_mul(const UnitQuat& a, const UnitQuat& b) {
  const double eta = a.eta * b.eta - a.eps.dot(b.eps);
  const Vec3 eps = a.eta * b.eps + b.eta * a.eps + a.eps.cross(b.eps);
  return UnitQuat::from_components(eta, eps);
}

Vec3 quat_rotate(const UnitQuat& q, const Vec3& v) {
  // v + 2 eta (eps x v) + 2 eps x (eps x v)
  const Vec3 t = 2.0 * q.eps.cross(v);
  return v + q.eta * t + q.eps.cross(t);
}

UnitVec3 normalize(const Vec3& v) { return UnitVec3(v); }

std::optional<UnitVec3> try_normalize(const Vec3& v) {
  if (!(v.norm() > kNormEpsilon)) return std::nullopt;
  return UnitVec3(v);
}

QuatRate quat_kinematics(const UnitQuat& q, const Vec3& w) {
  return {-0.5 * q.eps.dot(w), 0.5 * (q.eta * w + q.eps.cross(w))};
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

double angle_deg(const Vec3& a, const Vec3& b) {
  return std::acos(std::clamp(a.dot(b), -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

}  // namespace maats
