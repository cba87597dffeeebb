#pragma once

// 3-D vector and Hamilton quaternion helpers shared by every module.
//
// Convention: q = [eta, eps], q* = [eta, -eps], composition is the Hamilton
// product, and rotate(q, v) = q (x) [0, v] (x) q*  (active rotation R(q) v).

#include <Eigen/Dense>
#include <optional>

#include "maats/error.hpp"

namespace maats {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Norm below which a direction cannot be extracted.
inline constexpr double kNormEpsilon = 1e-9;

inline Vec3 e3() { return Vec3::UnitZ(); }

/// A direction on the unit sphere. Construction normalizes; there is no way
/// to hold a non-unit value.
class UnitVec3 {
 public:
  UnitVec3() : dir_(Vec3::UnitZ()) {}

  /// Throws Error{DegenerateNorm} when |v| <= kNormEpsilon.
  explicit UnitVec3(const Vec3& v);

  const Vec3& dir() const { return dir_; }
  operator const Vec3&() const { return dir_; }

  double x() const { return dir_.x(); }
  double y() const { return dir_.y(); }
  double z() const { return dir_.z(); }

  bool operator==(const UnitVec3& o) const { return dir_ == o.dir_; }

 private:
  Vec3 dir_;
};

/// Unit quaternion, scalar-first.
struct UnitQuat {
  double eta = 1.0;
  Vec3 eps = Vec3::Zero();

  static UnitQuat identity() { return {}; }
  /// Rotation of `angle` radians about `axis` (axis need not be unit).
  static UnitQuat from_axis_angle(const Vec3& axis, double angle);

  /// Builds from raw components and renormalizes.
  static UnitQuat from_components(double eta, const Vec3& eps);

  UnitQuat conjugate() const { return {eta, -eps}; }
  UnitQuat negated() const { return {-eta, -eps}; }
  double squared_norm() const { return eta * eta + eps.squaredNorm(); }

  Mat3 rotation_matrix() const;

  bool operator==(const UnitQuat& o) const { return eta == o.eta && eps == o.eps; }
};

/// Hamilton product a (x) b, renormalized.
UnitQuat quat_mul(const UnitQuat& a, const UnitQuat& b);

/// R(q) v.
Vec3 quat_rotate(const UnitQuat& q, const Vec3& v);

/// v / |v|; throws Error{DegenerateNorm} when |v| <= kNormEpsilon.
UnitVec3 normalize(const Vec3& v);

/// Non-throwing variant for hot loops that have their own fallback.
std::optional<UnitVec3> try_normalize(const Vec3& v);

/// Time derivative of q under body rate omega: 0.5 q (x) [0, omega].
/// Returned unnormalized as raw (eta, eps) rates.
struct QuatRate {
  double eta = 0.0;
  Vec3 eps = Vec3::Zero();
};
QuatRate quat_kinematics(const UnitQuat& q, const Vec3& body_rate);

Mat3 skew(const Vec3& v);

/// Angle between two unit directions in degrees, with the dot product
/// clamped into [-1, 1].
double angle_deg(const Vec3& a, const Vec3& b);

}  // namespace maats
