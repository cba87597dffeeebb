#include <cmath>
#include <random>

#include "doctest.h"
#include "maats/control.hpp"
#include "maats/error.hpp"

using namespace maats;

namespace {

PlantState hover_state(int n, const std::vector<UnitVec3>& dirs) {
  PlantState s;
  for (int i = 0; i < n; ++i) {
    s.alpha.push_back(dirs[i]);
    s.omega_c.push_back(Vec3::Zero());
    s.q.push_back(UnitQuat::identity());
    s.Omega.push_back(Vec3::Zero());
  }
  return s;
}

std::vector<UnitVec3> square_cone(double half_angle_rad) {
  std::vector<UnitVec3> d;
  for (int i = 0; i < 4; ++i) {
    const double az = i * std::numbers::pi / 2;
    d.emplace_back(Vec3(std::sin(half_angle_rad) * std::cos(az), std::sin(half_angle_rad) * std::sin(az),
                        std::cos(half_angle_rad)));
  }
  return d;
}

}  // namespace

TEST_CASE("load_control feedforward at hover") {
  LoadGains g;
  const PlantState s = hover_state(1, {UnitVec3(e3())});
  const LoadControlResult r = load_control(g, 0.225, 9.81, s, ReferencePoint{}, LoadControllerState{}, 1e-3);
  CHECK(r.uL.x() == 0.0);
  CHECK(r.uL.y() == 0.0);
  CHECK(r.uL.z() == doctest::Approx(-2.207).epsilon(1e-3));
  CHECK(r.uL.z() == doctest::Approx(-0.225 * 9.81).epsilon(1e-15));
}

TEST_CASE("load_control feedback restores the load") {
  LoadGains g;
  PlantState s = hover_state(1, {UnitVec3(e3())});
  s.xL = Vec3(0.01, 0, 0);
  const Vec3 ff(0, 0, -0.225 * 9.81);
  const Vec3 u1 = load_control(g, 0.225, 9.81, s, ReferencePoint{}, LoadControllerState{}, 1e-3).uL;
  // the cables apply -uL to the load
  CHECK(-(u1 - ff).x() == doctest::Approx(-0.08).epsilon(1e-12));

  s.xL = Vec3(0.02, 0, 0);
  const Vec3 u2 = load_control(g, 0.225, 9.81, s, ReferencePoint{}, LoadControllerState{}, 1e-3).uL;
  CHECK((u2 - ff).x() == doctest::Approx(2.0 * (u1 - ff).x()).epsilon(1e-15));

  s.xL = Vec3::Zero();
  s.vL = Vec3(0, -0.5, 0);
  const Vec3 u3 = load_control(g, 0.225, 9.81, s, ReferencePoint{}, LoadControllerState{}, 1e-3).uL;
  CHECK(-(u3 - ff).y() == doctest::Approx(1.0).epsilon(1e-12));  // damping opposes velocity
}

TEST_CASE("load_control closes a stable loop on a point mass") {
  // m x'' = -uL.x with the gains above: x -> 0.
  LoadGains g;
  PlantState s = hover_state(1, {UnitVec3(e3())});
  s.xL = Vec3(0.2, 0, 0);
  LoadControllerState cs;
  const double dt = 1e-3;
  for (int k = 0; k < 10000; ++k) {
    const LoadControlResult r = load_control(g, 0.225, 9.81, s, ReferencePoint{}, cs, dt);
    cs = r.state;
    const Vec3 a = -r.uL / 0.225 - 9.81 * e3();
    s.vL += dt * a;
    s.xL += dt * s.vL;
  }
  CHECK(s.xL.norm() < 1e-6);
}

TEST_CASE("load_control integral and anti-windup") {
  LoadGains g;
  g.ki = Vec3::Constant(2.0);
  g.windup_limit = 1.0;
  PlantState s = hover_state(1, {UnitVec3(e3())});
  s.xL = Vec3(5.0, -5.0, 0.0);
  LoadControllerState cs;
  for (int k = 0; k < 5000; ++k) cs = load_control(g, 0.225, 9.81, s, ReferencePoint{}, cs, 1e-3).state;
  CHECK(cs.integral.x() == doctest::Approx(0.5));
  CHECK(cs.integral.y() == doctest::Approx(-0.5));
  CHECK(cs.integral.z() == 0.0);

  // same inputs and same integral give the same output
  const Vec3 a = load_control(g, 0.225, 9.81, s, ReferencePoint{}, cs, 1e-3).uL;
  const Vec3 b = load_control(g, 0.225, 9.81, s, ReferencePoint{}, cs, 1e-3).uL;
  CHECK(a == b);

  // trapezoid: constant error e for k steps after priming gives k dt e
  LoadControllerState fresh;
  s.xL = Vec3(0.1, 0, 0);
  for (int k = 0; k < 11; ++k) fresh = load_control(g, 0.225, 9.81, s, ReferencePoint{}, fresh, 1e-2).state;
  CHECK(fresh.integral.x() == doctest::Approx(0.1 * 10 * 1e-2).epsilon(1e-12));
}

TEST_CASE("attitude_from_thrust") {
  const UnitQuat id = attitude_from_thrust(UnitVec3(e3()));
  CHECK(id.eta == doctest::Approx(1.0));
  CHECK(id.eps.norm() < 1e-15);

  const UnitQuat q = attitude_from_thrust(UnitVec3(Vec3(0.6, 0, 0.8)));
  CHECK(q.eta == doctest::Approx(std::sqrt(3.6) / 2).epsilon(1e-14));
  CHECK(q.eps.x() == doctest::Approx(0.0));
  CHECK(q.eps.y() == doctest::Approx(0.6 / std::sqrt(3.6)).epsilon(1e-14));
  CHECK(q.eps.z() == 0.0);
  CHECK((quat_rotate(q, e3()) - Vec3(0.6, 0, 0.8)).norm() < 1e-15);

  std::mt19937 rng(41);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 500; ++k) {
    const Vec3 v(nd(rng), nd(rng), nd(rng));
    if (v.normalized().z() <= -1.0 + 1e-3) continue;
    const UnitVec3 u(v);
    const UnitQuat r = attitude_from_thrust(u);
    CHECK((quat_rotate(r, e3()) - u.dir()).norm() < 1e-9);
    CHECK(r.eps.z() == 0.0);
  }

  CHECK_THROWS_AS(attitude_from_thrust(UnitVec3(-e3())), Error);
  try {
    attitude_from_thrust(UnitVec3(Vec3(1e-5, 0, -1)));
    FAIL("expected AttitudeSingularity");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AttitudeSingularity);
  }
}

TEST_CASE("position_control at symmetric hover") {
  const PlantParams p = PlantParams::defaults(4);
  const auto dirs = square_cone(35.0 * std::numbers::pi / 180.0);
  const PlantState s = hover_state(4, dirs);
  const double Td = p.m_load * p.g / (4.0 * dirs[0].z());
  UavGains g;
  for (int i = 0; i < 4; ++i) {
    const PositionControlResult r =
        position_control(g, p, CableAllocation{Td, dirs[i]}, s, ReferencePoint{}, UavControllerState{}, i, 1e-3);
    const Vec3 expected = p.m_uav[i] * p.g * e3() + Td * dirs[i].dir();
    CHECK(r.cmd.f_id == doctest::Approx(expected.norm()).epsilon(1e-14));
    CHECK(r.cmd.f_id > p.m_uav[i] * p.g);
    CHECK((quat_rotate(r.cmd.q_id, e3()) - expected.normalized()).norm() < 1e-12);
    CHECK(r.cmd.Omega_id.norm() == 0.0);
  }
}

TEST_CASE("position_control reacts to UAV position error") {
  const PlantParams p = PlantParams::defaults(1);
  PlantState s = hover_state(1, {UnitVec3(e3())});
  s.xL = Vec3(0.1, 0, 0);  // UAV displaced +x with the load
  UavGains g;
  g.ki = Vec3::Zero();
  const PositionControlResult r =
      position_control(g, p, CableAllocation{0.0, UnitVec3(e3())}, s, ReferencePoint{}, UavControllerState{}, 0, 1e-3);
  const Vec3 u = r.cmd.f_id * quat_rotate(r.cmd.q_id, e3());
  CHECK(u.x() == doctest::Approx(-40.0 * 0.1).epsilon(1e-12));
  CHECK(u.z() == doctest::Approx(p.m_uav[0] * p.g).epsilon(1e-12));
}

TEST_CASE("position_control degenerate thrust") {
  const PlantParams p = PlantParams::defaults(1);
  const PlantState s = hover_state(1, {UnitVec3(e3())});
  ReferencePoint r;
  r.aLd = -p.g * e3();  // free-fall reference with no cable load: u = 0
  try {
    position_control(UavGains{}, p, CableAllocation{0.0, UnitVec3(e3())}, s, r, UavControllerState{}, 0, 1e-3);
    FAIL("expected DegenerateThrust");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateThrust);
  }
}

TEST_CASE("reference body rate of a steadily tilting thrust") {
  // u(t) = 10 (sin wt, 0, cos wt): the zero-yaw reference rotates about body y
  // at rate w, so Omega_id -> (0, w, 0).
  const PlantParams p = PlantParams::defaults(1);
  const PlantState s = hover_state(1, {UnitVec3(e3())});
  UavGains g;
  const double w = 0.5, dt = 1e-3;
  UavControllerState cs;
  ControlCommand last;
  for (int k = 0; k < 400; ++k) {
    const double t = k * dt;
    ReferencePoint r;
    r.aLd = 10.0 * Vec3(std::sin(w * t), 0, std::cos(w * t)) / p.m_uav[0] - p.g * e3();
    const PositionControlResult res =
        position_control(g, p, CableAllocation{0.0, UnitVec3(e3())}, s, r, cs, 0, dt);
    cs = res.state;
    last = res.cmd;
  }
  CHECK(last.Omega_id.x() == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(last.Omega_id.y() == doctest::Approx(w).epsilon(0.01));
  CHECK(last.Omega_id.z() == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("q_id sign continuity") {
  // Thrust swinging through a sequence keeps q_id on one hemisphere.
  const PlantParams p = PlantParams::defaults(1);
  const PlantState s = hover_state(1, {UnitVec3(e3())});
  UavControllerState cs;
  UnitQuat prev = UnitQuat::identity();
  for (int k = 0; k < 200; ++k) {
    ReferencePoint r;
    const double a = 0.02 * k;
    r.aLd = 10.0 * Vec3(std::sin(a), 0.3 * std::sin(2 * a), std::cos(a)) - p.g * e3();
    const PositionControlResult res = position_control(UavGains{}, p, CableAllocation{0.0, UnitVec3(e3())}, s, r, cs, 0, 1e-3);
    CHECK(prev.eta * res.cmd.q_id.eta + prev.eps.dot(res.cmd.q_id.eps) > 0.0);
    prev = res.cmd.q_id;
    cs = res.state;
  }
}

TEST_CASE("attitude_control") {
  UavGains g;
  PlantState s = hover_state(1, {UnitVec3(e3())});
  ControlCommand cmd;

  SUBCASE("equilibrium") {
    s.q[0] = UnitQuat::from_axis_angle(Vec3(1, 2, 3), 0.4);
    s.Omega[0] = Vec3(0.1, -0.2, 0.3);
    cmd.q_id = s.q[0];
    cmd.Omega_id = s.Omega[0];
    CHECK(attitude_control(g, s, cmd, 0).norm() < 1e-14);
  }
  SUBCASE("pure rate error in the linear region") {
    s.Omega[0] = Vec3(0.01, -0.02, 0.005);
    const Vec3 tau = attitude_control(g, s, cmd, 0);
    const Vec3 expected = -(g.kd_att + g.beta.cwiseProduct(g.gamma)).cwiseProduct(s.Omega[0]);
    CHECK((tau - expected).norm() < 1e-15);
  }
  SUBCASE("saturation bound") {
    std::mt19937 rng(43);
    std::normal_distribution<double> nd;
    for (int k = 0; k < 200; ++k) {
      s.q[0] = UnitQuat::from_components(nd(rng), Vec3(nd(rng), nd(rng), nd(rng)));
      s.Omega[0] = 20.0 * Vec3(nd(rng), nd(rng), nd(rng));
      cmd.q_id = UnitQuat::from_components(nd(rng), Vec3(nd(rng), nd(rng), nd(rng)));
      UnitQuat qe = quat_mul(cmd.q_id.conjugate(), s.q[0]);
      if (qe.eta < 0.0) qe = qe.negated();
      const Vec3 sigma = s.Omega[0] + g.rho.cwiseProduct(qe.eps);
      const Vec3 tau = attitude_control(g, s, cmd, 0);
      for (int j = 0; j < 3; ++j) {
        CHECK(std::abs(tau[j]) <= g.kd_att[j] * std::abs(sigma[j]) + g.beta[j] * g.sat_limit + 1e-12);
      }
    }
  }
  SUBCASE("flipping q_id never changes the torque") {
    std::mt19937 rng(47);
    std::normal_distribution<double> nd;
    for (int k = 0; k < 100; ++k) {
      s.q[0] = UnitQuat::from_components(nd(rng), Vec3(nd(rng), nd(rng), nd(rng)));
      s.Omega[0] = Vec3(nd(rng), nd(rng), nd(rng));
      cmd.q_id = UnitQuat::from_components(nd(rng), Vec3(nd(rng), nd(rng), nd(rng)));
      const Vec3 a = attitude_control(g, s, cmd, 0);
      ControlCommand flipped = cmd;
      flipped.q_id = cmd.q_id.negated();
      CHECK((attitude_control(g, s, flipped, 0) - a).norm() < 1e-12);
    }
  }
  SUBCASE("restoring direction") {
    s.q[0] = UnitQuat::from_axis_angle(Vec3::UnitX(), 0.001);
    CHECK(attitude_control(g, s, cmd, 0).x() < 0.0);
  }
}
