#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hmpc/dynamics.hpp"

using namespace hmpc;

namespace {

VehicleParams table_params() { return VehicleParams{}; }

// Independent transcription of the continuous model, kept separate from the
// library path so single-step expectations have their own oracle.
StateDerivative reference_derivative(const VehicleState& s,
                                     const ControlInput& u,
                                     const VehicleParams& p) {
  StateDerivative d;
  d.x = s.vx * std::cos(s.theta) - s.vy * std::sin(s.theta);
  d.y = s.vx * std::sin(s.theta) + s.vy * std::cos(s.theta);
  d.theta = s.r;
  d.delta = u.gamma;
  d.vx = u.accel + s.r * s.vy;
  d.vy = -(2 * p.c_alpha_f + 2 * p.c_alpha_r) / (p.mass * s.vx) * s.vy +
         ((2 * p.c_alpha_r * p.l2 - 2 * p.c_alpha_f * p.l1) / (p.mass * s.vx) -
          s.vx) *
             s.r +
         2 * p.c_alpha_f / p.mass * s.delta;
  d.r = 2 * p.c_alpha_f * p.l1 / p.yaw_inertia * s.delta -
        (2 * p.c_alpha_f * p.l1 - 2 * p.c_alpha_r * p.l2) /
            (p.yaw_inertia * s.vx) * s.vy -
        (2 * p.c_alpha_f * p.l1 * p.l1 + 2 * p.c_alpha_r * p.l2 * p.l2) /
            (p.yaw_inertia * s.vx) * s.r;
  return d;
}

VehicleState mirror(const VehicleState& s) {
  VehicleState m = s;
  m.y = -s.y;
  m.theta = -s.theta;
  m.delta = -s.delta;
  m.vy = -s.vy;
  m.r = -s.r;
  return m;
}

VehicleState integrate_fine(const VehicleState& s0, const ControlInput& u,
                            const VehicleParams& p, double total_t, int steps) {
  VehicleState s = s0;
  const double h = total_t / steps;
  for (int i = 0; i < steps; ++i) s = step_rk4(s, u, p, h);
  return s;
}

double state_error(const VehicleState& a, const VehicleState& b) {
  return (a.to_vector() - b.to_vector()).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("derivative: straight coasting") {
  const VehicleParams p = table_params();
  const VehicleState s{0, 0, 0, 0, 20, 0, 0};
  const StateDerivative d = derivative(s, {0, 0}, p);
  CHECK(d.x == doctest::Approx(20.0));
  CHECK(d.y == doctest::Approx(0.0));
  CHECK(d.theta == doctest::Approx(0.0));
  CHECK(d.delta == doctest::Approx(0.0));
  CHECK(d.vx == doctest::Approx(0.0));
  CHECK(d.vy == doctest::Approx(0.0));
  CHECK(d.r == doctest::Approx(0.0));
}

TEST_CASE("derivative: small steering at 20 m/s") {
  const VehicleParams p = table_params();
  const VehicleState s{0, 0, 0, 0.01, 20, 0, 0};
  const StateDerivative d = derivative(s, {0, 0}, p);
  // 2*250000*0.01/1590 and 2*250000*1.18*0.01/2687, by hand.
  CHECK(d.vy == doctest::Approx(3.144654088).epsilon(1e-6));
  CHECK(d.r == doctest::Approx(2.195757350).epsilon(1e-6));
}

TEST_CASE("derivative: saturated input bounds") {
  const VehicleParams p = table_params();
  const VehicleState s{0, 0, 0, 0, 25, 0.1, 0.02};
  const StateDerivative d = derivative(s, {M_PI / 2.0, 2.0}, p);
  CHECK(d.delta == doctest::Approx(M_PI / 2.0));
  CHECK(d.vx == doctest::Approx(2.0 + 0.02 * 0.1));
}

TEST_CASE("derivative: speed floor is rejected, not clamped") {
  const VehicleParams p = table_params();
  VehicleState s{0, 0, 0, 0, 0.5, 0, 0};
  CHECK_THROWS_AS(derivative(s, {0, 0}, p), DomainError);
  s.vx = p.vx_floor;  // boundary is inclusive
  CHECK_NOTHROW(derivative(s, {0, 0}, p));
}

TEST_CASE("step_euler: trivial advances") {
  const VehicleParams p = table_params();
  const VehicleState s{0, 0, 0, 0, 20, 0, 0};
  const VehicleState a = step_euler(s, {0, 0}, p, 0.5);
  CHECK(a.x == doctest::Approx(10.0));
  CHECK(a.vx == doctest::Approx(20.0));

  const VehicleState b = step_euler(s, {0, 2.0}, p, 0.5);
  CHECK(b.x == doctest::Approx(10.0));  // start-of-step derivative
  CHECK(b.vx == doctest::Approx(21.0));
}

TEST_CASE("step_euler: curved state matches independent evaluation") {
  const VehicleParams p = table_params();
  const VehicleState s{3.0, -1.0, 0.05, 0.02, 24.0, 0.3, 0.08};
  const ControlInput u{0.1, 0.7};
  const double dt = 0.25;
  const VehicleState got = step_euler(s, u, p, dt);
  const StateDerivative d = reference_derivative(s, u, p);
  const VehicleState want =
      VehicleState::from_vector(s.to_vector() + dt * d.to_vector());
  CHECK(state_error(got, want) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("step_rk4: equals Euler on straight coasting") {
  const VehicleParams p = table_params();
  const VehicleState s{0, 0, 0, 0, 20, 0, 0};
  const VehicleState a = step_euler(s, {0, 0}, p, 0.5);
  const VehicleState b = step_rk4(s, {0, 0}, p, 0.5);
  CHECK(state_error(a, b) == doctest::Approx(0.0));
  CHECK(b.x == doctest::Approx(10.0));
}

TEST_CASE("step_rk4: exact on constant-acceleration straight motion") {
  const VehicleParams p = table_params();
  const VehicleState s{0, 0, 0, 0, 20, 0, 0};
  const double a = 1.3;
  const double dt = 0.5;
  const VehicleState next = step_rk4(s, {0, a}, p, dt);
  CHECK(next.vx == doctest::Approx(20.0 + a * dt).epsilon(1e-12));
  CHECK(next.x ==
        doctest::Approx(20.0 * dt + 0.5 * a * dt * dt).epsilon(1e-12));
  CHECK(next.y == doctest::Approx(0.0));
}

TEST_CASE("step_rk4: halving dt shrinks error about 16x on a curved maneuver") {
  const VehicleParams p = table_params();
  // Start on the steady cornering manifold so the fast tire transient does
  // not dominate the truncation error.
  const double delta = 0.05;
  const double vx = 25.0;
  const Eigen::Vector2d ss = steady_state_lateral(delta, vx, p);
  const VehicleState s0{0, 0, 0, delta, vx, ss[0], ss[1]};
  const ControlInput u{0.0, 0.4};
  const double T = 0.4;

  const VehicleState ref = integrate_fine(s0, u, p, T, 16000);
  const double err_coarse =
      state_error(integrate_fine(s0, u, p, T, 8), ref);   // dt = 0.05
  const double err_fine =
      state_error(integrate_fine(s0, u, p, T, 16), ref);  // dt = 0.025
  const double ratio = err_coarse / err_fine;
  CHECK(ratio > 10.0);
  CHECK(ratio < 24.0);
}

TEST_CASE("step_rk4: measured convergence order is ~4") {
  const VehicleParams p = table_params();
  // Steady cornering arc: the stiff tire subsystem stays on its manifold and
  // the measured error is the smooth kinematic truncation error. The speed
  // keeps the lateral eigenvalues inside the stability region at dt = 0.1.
  const Eigen::Vector2d ss = steady_state_lateral(0.05, 33.0, p);
  const VehicleState s0{0, 0, 0, 0.05, 33.0, ss[0], ss[1]};
  const ControlInput u{0.0, 0.0};
  const double T = 2.0;
  const VehicleState ref = integrate_fine(s0, u, p, T, 80000);

  const double dts[3] = {0.1, 0.05, 0.025};
  double log_err[3];
  for (int i = 0; i < 3; ++i) {
    const int steps = static_cast<int>(std::round(T / dts[i]));
    log_err[i] = std::log2(state_error(integrate_fine(s0, u, p, T, steps), ref));
  }
  const double order =
      ((log_err[0] - log_err[1]) + (log_err[1] - log_err[2])) / 2.0;
  CHECK(order >= 3.8);
  CHECK(order <= 4.2);
}

TEST_CASE("step_rk4: stage domain violations name the stage") {
  const VehicleParams p = table_params();
  // vx at the floor with hard braking dips below it inside the step.
  const VehicleState s{0, 0, 0, 0, p.vx_floor + 0.01, 0, 0};
  CHECK_THROWS_WITH_AS(step_rk4(s, {0, -2.0}, p, 0.5),
                       doctest::Contains("stage"), DomainError);
  VehicleState out;
  CHECK_FALSE(try_step_rk4(s, {0, -2.0}, p, 0.5, &out));
}

TEST_CASE("lateral_acceleration: values and threshold") {
  const VehicleParams p = table_params();
  CHECK(lateral_acceleration({0, 0, 0, 0, 20, 0, 0}, p) ==
        doctest::Approx(0.0));
  CHECK(lateral_acceleration({0, 0, 0, 0.01, 20, 0, 0}, p) ==
        doctest::Approx(3.144654088).epsilon(1e-6));
  CHECK(p.rollover_accel_limit() == doctest::Approx(6.38671875).epsilon(1e-9));
}

TEST_CASE("slip_angles: hand-evaluated case and inclusive boundary") {
  const VehicleParams p = table_params();
  const SlipAngles zero = slip_angles({0, 0, 0, 0, 20, 0, 0}, p);
  CHECK(zero.front == doctest::Approx(0.0));
  CHECK(zero.rear == doctest::Approx(0.0));

  const SlipAngles a = slip_angles({0, 0, 0, 0, 25, 0.5, 0.1}, p);
  CHECK(a.front == doctest::Approx(0.02472).epsilon(1e-6));
  CHECK(a.rear == doctest::Approx(0.01292).epsilon(1e-6));

  // alpha exactly at the limit is feasible (closed constraint set).
  const double alpha_max = 0.052;
  CHECK(a.front <= alpha_max);
}

TEST_CASE("mirror symmetry: lateral quantities are odd") {
  const VehicleParams p = table_params();
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    VehicleState s;
    s.x = 100.0 * unit(rng);
    s.y = 4.0 * unit(rng);
    s.theta = 0.3 * unit(rng);
    s.delta = 0.2 * unit(rng);
    s.vx = 10.0 + 20.0 * std::abs(unit(rng));
    s.vy = 1.5 * unit(rng);
    s.r = 0.5 * unit(rng);
    const ControlInput u{0.5 * unit(rng), 2.0 * unit(rng)};

    const VehicleState m = mirror(s);
    CHECK(lateral_acceleration(m, p) ==
          doctest::Approx(-lateral_acceleration(s, p)).epsilon(1e-10));
    const SlipAngles sa = slip_angles(s, p);
    const SlipAngles sm = slip_angles(m, p);
    CHECK(sm.front == doctest::Approx(-sa.front).epsilon(1e-10));
    CHECK(sm.rear == doctest::Approx(-sa.rear).epsilon(1e-10));

    // The full dynamics commute with the mirror map.
    const StateDerivative d = derivative(s, u, p);
    const StateDerivative dm = derivative(m, {-u.gamma, u.accel}, p);
    CHECK(dm.x == doctest::Approx(d.x).epsilon(1e-10));
    CHECK(dm.y == doctest::Approx(-d.y).epsilon(1e-10));
    CHECK(dm.theta == doctest::Approx(-d.theta).epsilon(1e-10));
    CHECK(dm.vy == doctest::Approx(-d.vy).epsilon(1e-10));
    CHECK(dm.r == doctest::Approx(-d.r).epsilon(1e-10));
    CHECK(dm.vx == doctest::Approx(d.vx).epsilon(1e-10));
  }
}

TEST_CASE("jacobians match central finite differences") {
  const VehicleParams p = table_params();
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int k = 0; k < 30; ++k) {
    // Sample near the steady cornering manifold; far off it the stiff tire
    // terms blow through the stage domain at planning step sizes.
    VehicleState s;
    s.x = 50.0 * unit(rng);
    s.y = 3.0 * unit(rng);
    s.theta = 0.3 * unit(rng);
    s.delta = 0.1 * unit(rng);
    s.vx = 12.0 + 15.0 * std::abs(unit(rng));
    const Eigen::Vector2d ss = steady_state_lateral(s.delta, s.vx, p);
    s.vy = ss[0] + 0.1 * unit(rng);
    s.r = ss[1] + 0.05 * unit(rng);
    const ControlInput u{0.8 * unit(rng), 1.5 * unit(rng)};
    const double dt = 0.15;

    VehicleState next;
    StateJacobian jx;
    InputJacobian ju;
    REQUIRE(step_rk4_jacobian(s, u, p, dt, &next, &jx, &ju));

    const double h = 1e-6;
    for (int c = 0; c < 7; ++c) {
      Eigen::Matrix<double, 7, 1> plus = s.to_vector();
      Eigen::Matrix<double, 7, 1> minus = s.to_vector();
      plus[c] += h;
      minus[c] -= h;
      VehicleState np, nm;
      REQUIRE(try_step_rk4(VehicleState::from_vector(plus), u, p, dt, &np));
      REQUIRE(try_step_rk4(VehicleState::from_vector(minus), u, p, dt, &nm));
      const Eigen::Matrix<double, 7, 1> fd =
          (np.to_vector() - nm.to_vector()) / (2.0 * h);
      const double err = (fd - jx.col(c)).cwiseAbs().maxCoeff();
      CHECK(err <= 1e-4 * std::max(1.0, jx.col(c).cwiseAbs().maxCoeff()));
    }
    for (int c = 0; c < 2; ++c) {
      ControlInput up = u;
      ControlInput um = u;
      (c == 0 ? up.gamma : up.accel) += h;
      (c == 0 ? um.gamma : um.accel) -= h;
      VehicleState np, nm;
      REQUIRE(try_step_rk4(s, up, p, dt, &np));
      REQUIRE(try_step_rk4(s, um, p, dt, &nm));
      const Eigen::Matrix<double, 7, 1> fd =
          (np.to_vector() - nm.to_vector()) / (2.0 * h);
      const double err = (fd - ju.col(c)).cwiseAbs().maxCoeff();
      CHECK(err <= 1e-4 * std::max(1.0, ju.col(c).cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("steady-state lateral solution zeroes the lateral derivatives") {
  const VehicleParams p = table_params();
  const Eigen::Vector2d ss = steady_state_lateral(0.03, 22.0, p);
  const VehicleState s{0, 0, 0, 0.03, 22.0, ss[0], ss[1]};
  const StateDerivative d = derivative(s, {0, 0}, p);
  CHECK(d.vy == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(d.r == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("params validation") {
  VehicleParams p = table_params();
  CHECK_NOTHROW(p.validate());
  p.rollover_eta = 1.5;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p = table_params();
  p.mass = -1;
  CHECK_THROWS_AS(p.validate(), DomainError);
  CHECK(table_params().wheelbase_circle_radius() == doctest::Approx(1.475));
}
