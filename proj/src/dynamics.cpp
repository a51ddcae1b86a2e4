#include "hmpc/dynamics.hpp"

#include <cmath>

namespace hmpc {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0)) {
    throw DomainError(std::string("VehicleParams: ") + name +
                      " must be strictly positive");
  }
}

StateDerivative derivative_unchecked(const VehicleState& s,
                                     const ControlInput& u,
                                     const VehicleParams& p) {
  const double cf2 = 2.0 * p.c_alpha_f;
  const double cr2 = 2.0 * p.c_alpha_r;
  const double cos_t = std::cos(s.theta);
  const double sin_t = std::sin(s.theta);

  StateDerivative d;
  d.x = s.vx * cos_t - s.vy * sin_t;
  d.y = s.vx * sin_t + s.vy * cos_t;
  d.theta = s.r;
  d.delta = u.gamma;
  d.vx = u.accel + s.r * s.vy;
  d.vy = -(cf2 + cr2) / (p.mass * s.vx) * s.vy +
         ((cr2 * p.l2 - cf2 * p.l1) / (p.mass * s.vx) - s.vx) * s.r +
         cf2 / p.mass * s.delta;
  d.r = cf2 * p.l1 / p.yaw_inertia * s.delta -
        (cf2 * p.l1 - cr2 * p.l2) / (p.yaw_inertia * s.vx) * s.vy -
        (cf2 * p.l1 * p.l1 + cr2 * p.l2 * p.l2) / (p.yaw_inertia * s.vx) * s.r;
  return d;
}

}  // namespace

void VehicleParams::validate() const {
  require_positive(c_alpha_f, "c_alpha_f");
  require_positive(c_alpha_r, "c_alpha_r");
  require_positive(l1, "l1");
  require_positive(l2, "l2");
  require_positive(mass, "mass");
  require_positive(yaw_inertia, "yaw_inertia");
  require_positive(cg_height, "cg_height");
  require_positive(track_width, "track_width");
  require_positive(circle_radius, "circle_radius");
  require_positive(vx_floor, "vx_floor");
  if (!(rollover_eta > 0.0 && rollover_eta <= 1.0)) {
    throw DomainError("VehicleParams: rollover_eta must be in (0, 1]");
  }
}

StateDerivative derivative(const VehicleState& state, const ControlInput& input,
                           const VehicleParams& params) {
  if (!(state.vx >= params.vx_floor)) {
    throw DomainError("derivative: vx = " + std::to_string(state.vx) +
                      " below vx_floor = " + std::to_string(params.vx_floor));
  }
  return derivative_unchecked(state, input, params);
}

VehicleState step_euler(const VehicleState& state, const ControlInput& input,
                        const VehicleParams& params, double dt) {
  if (!(dt > 0.0)) {
    throw DomainError("step_euler: dt must be positive");
  }
  const StateDerivative d = derivative(state, input, params);
  return VehicleState::from_vector(state.to_vector() + dt * d.to_vector());
}

bool try_step_rk4(const VehicleState& state, const ControlInput& input,
                  const VehicleParams& params, double dt, VehicleState* out) {
  if (state.vx < params.vx_floor) return false;
  const auto vec = [](const VehicleState& s) { return s.to_vector(); };

  const StateDerivative k1 = derivative_unchecked(state, input, params);
  VehicleState s2 =
      VehicleState::from_vector(vec(state) + 0.5 * dt * k1.to_vector());
  if (s2.vx < params.vx_floor) return false;

  const StateDerivative k2 = derivative_unchecked(s2, input, params);
  VehicleState s3 =
      VehicleState::from_vector(vec(state) + 0.5 * dt * k2.to_vector());
  if (s3.vx < params.vx_floor) return false;

  const StateDerivative k3 = derivative_unchecked(s3, input, params);
  VehicleState s4 = VehicleState::from_vector(vec(state) + dt * k3.to_vector());
  if (s4.vx < params.vx_floor) return false;

  const StateDerivative k4 = derivative_unchecked(s4, input, params);
  *out = VehicleState::from_vector(
      vec(state) + dt / 6.0 *
                       (k1.to_vector() + 2.0 * k2.to_vector() +
                        2.0 * k3.to_vector() + k4.to_vector()));
  return true;
}

VehicleState step_rk4(const VehicleState& state, const ControlInput& input,
                      const VehicleParams& params, double dt) {
  if (!(dt > 0.0)) {
    throw DomainError("step_rk4: dt must be positive");
  }
  // Re-run the stages explicitly so a violation names the failing stage.
  if (state.vx < params.vx_floor) {
    throw DomainError("step_rk4: stage 1 state has vx below vx_floor");
  }
  const StateDerivative k1 = derivative_unchecked(state, input, params);
  VehicleState s2 = VehicleState::from_vector(state.to_vector() +
                                              0.5 * dt * k1.to_vector());
  if (s2.vx < params.vx_floor) {
    throw DomainError("step_rk4: stage 2 state has vx below vx_floor");
  }
  const StateDerivative k2 = derivative_unchecked(s2, input, params);
  VehicleState s3 = VehicleState::from_vector(state.to_vector() +
                                              0.5 * dt * k2.to_vector());
  if (s3.vx < params.vx_floor) {
    throw DomainError("step_rk4: stage 3 state has vx below vx_floor");
  }
  const StateDerivative k3 = derivative_unchecked(s3, input, params);
  VehicleState s4 =
      VehicleState::from_vector(state.to_vector() + dt * k3.to_vector());
  if (s4.vx < params.vx_floor) {
    throw DomainError("step_rk4: stage 4 state has vx below vx_floor");
  }
  const StateDerivative k4 = derivative_unchecked(s4, input, params);
  return VehicleState::from_vector(
      state.to_vector() + dt / 6.0 *
                              (k1.to_vector() + 2.0 * k2.to_vector() +
                               2.0 * k3.to_vector() + k4.to_vector()));
}

double lateral_acceleration(const VehicleState& state,
                            const VehicleParams& params) {
  if (!(state.vx >= params.vx_floor)) {
    throw DomainError("lateral_acceleration: vx below vx_floor");
  }
  const double cf = params.c_alpha_f;
  const double cr = params.c_alpha_r;
  const double m = params.mass;
  return -state.vx * state.r +
         2.0 * (cf / m * (state.delta - (state.vy + params.l1 * state.r) / state.vx) +
                cr * (params.l2 * state.r - state.vy) / (m * state.vx));
}

SlipAngles slip_angles(const VehicleState& state, const VehicleParams& params) {
  if (!(state.vx >= params.vx_floor)) {
    throw DomainError("slip_angles: vx below vx_floor");
  }
  SlipAngles a;
  a.front = (state.vy + params.l1 * state.r) / state.vx - state.delta;
  a.rear = (state.vy - params.l2 * state.r) / state.vx;
  return a;
}

void derivative_jacobian(const VehicleState& s, const ControlInput&,
                         const VehicleParams& p, StateJacobian* dfdx,
                         InputJacobian* dfdu) {
  const double cf2 = 2.0 * p.c_alpha_f;
  const double cr2 = 2.0 * p.c_alpha_r;
  const double m = p.mass;
  const double iz = p.yaw_inertia;
  const double vx = s.vx;
  const double vx2 = vx * vx;
  const double cos_t = std::cos(s.theta);
  const double sin_t = std::sin(s.theta);

  const double k1 = (cf2 + cr2) / m;              // vy damping numerator
  const double k2 = (cr2 * p.l2 - cf2 * p.l1) / m;  // vy/r coupling numerator
  const double k3 = (cf2 * p.l1 - cr2 * p.l2) / iz;
  const double k4 = (cf2 * p.l1 * p.l1 + cr2 * p.l2 * p.l2) / iz;

  StateJacobian& A = *dfdx;
  A.setZero();
  // x_dot = vx cos - vy sin
  A(0, 2) = -vx * sin_t - s.vy * cos_t;
  A(0, 4) = cos_t;
  A(0, 5) = -sin_t;
  // y_dot = vx sin + vy cos
  A(1, 2) = vx * cos_t - s.vy * sin_t;
  A(1, 4) = sin_t;
  A(1, 5) = cos_t;
  // theta_dot = r
  A(2, 6) = 1.0;
  // delta_dot = gamma (input only)
  // vx_dot = a + r vy
  A(4, 5) = s.r;
  A(4, 6) = s.vy;
  // vy_dot = -k1/vx vy + (k2/vx - vx) r + (cf2/m) delta
  A(5, 3) = cf2 / m;
  A(5, 4) = k1 * s.vy / vx2 - k2 * s.r / vx2 - s.r;
  A(5, 5) = -k1 / vx;
  A(5, 6) = k2 / vx - vx;
  // r_dot = (cf2 l1/iz) delta - k3/vx vy - k4/vx r
  A(6, 3) = cf2 * p.l1 / iz;
  A(6, 4) = (k3 * s.vy + k4 * s.r) / vx2;
  A(6, 5) = -k3 / vx;
  A(6, 6) = -k4 / vx;

  InputJacobian& B = *dfdu;
  B.setZero();
  B(3, 0) = 1.0;  // delta_dot = gamma
  B(4, 1) = 1.0;  // vx_dot includes a
}

bool step_rk4_jacobian(const VehicleState& state, const ControlInput& input,
                       const VehicleParams& params, double dt,
                       VehicleState* out, StateJacobian* dxnext_dx,
                       InputJacobian* dxnext_du) {
  if (state.vx < params.vx_floor) return false;
  const Eigen::Matrix<double, 7, 1> x0 = state.to_vector();

  StateJacobian fx;
  InputJacobian fu;

  const StateDerivative k1 = derivative_unchecked(state, input, params);
  derivative_jacobian(state, input, params, &fx, &fu);
  StateJacobian dk1_dx = fx;
  InputJacobian dk1_du = fu;

  VehicleState s2 = VehicleState::from_vector(x0 + 0.5 * dt * k1.to_vector());
  if (s2.vx < params.vx_floor) return false;
  const StateDerivative k2 = derivative_unchecked(s2, input, params);
  derivative_jacobian(s2, input, params, &fx, &fu);
  StateJacobian dk2_dx = fx * (StateJacobian::Identity() + 0.5 * dt * dk1_dx);
  InputJacobian dk2_du = fx * (0.5 * dt * dk1_du) + fu;

  VehicleState s3 = VehicleState::from_vector(x0 + 0.5 * dt * k2.to_vector());
  if (s3.vx < params.vx_floor) return false;
  const StateDerivative k3 = derivative_unchecked(s3, input, params);
  derivative_jacobian(s3, input, params, &fx, &fu);
  StateJacobian dk3_dx = fx * (StateJacobian::Identity() + 0.5 * dt * dk2_dx);
  InputJacobian dk3_du = fx * (0.5 * dt * dk2_du) + fu;

  VehicleState s4 = VehicleState::from_vector(x0 + dt * k3.to_vector());
  if (s4.vx < params.vx_floor) return false;
  const StateDerivative k4 = derivative_unchecked(s4, input, params);
  derivative_jacobian(s4, input, params, &fx, &fu);
  StateJacobian dk4_dx = fx * (StateJacobian::Identity() + dt * dk3_dx);
  InputJacobian dk4_du = fx * (dt * dk3_du) + fu;

  *out = VehicleState::from_vector(
      x0 + dt / 6.0 *
               (k1.to_vector() + 2.0 * k2.to_vector() + 2.0 * k3.to_vector() +
                k4.to_vector()));
  *dxnext_dx = StateJacobian::Identity() +
               dt / 6.0 * (dk1_dx + 2.0 * dk2_dx + 2.0 * dk3_dx + dk4_dx);
  *dxnext_du = dt / 6.0 * (dk1_du + 2.0 * dk2_du + 2.0 * dk3_du + dk4_du);
  return true;
}

Eigen::Matrix<double, 7, 1> lateral_acceleration_gradient(
    const VehicleState& s, const VehicleParams& p) {
  const double cf2 = 2.0 * p.c_alpha_f;
  const double cr2 = 2.0 * p.c_alpha_r;
  const double m = p.mass;
  const double vx = s.vx;
  const double vx2 = vx * vx;

  Eigen::Matrix<double, 7, 1> g = Eigen::Matrix<double, 7, 1>::Zero();
  g[3] = cf2 / m;                                                // d/ddelta
  g[4] = -s.r + cf2 / m * (s.vy + p.l1 * s.r) / vx2 -
         cr2 / m * (p.l2 * s.r - s.vy) / vx2;                    // d/dvx
  g[5] = -(cf2 + cr2) / (m * vx);                                // d/dvy
  g[6] = -vx + (cr2 * p.l2 - cf2 * p.l1) / (m * vx);             // d/dr
  return g;
}

void slip_angle_gradients(const VehicleState& s, const VehicleParams& p,
                          Eigen::Matrix<double, 7, 1>* front,
                          Eigen::Matrix<double, 7, 1>* rear) {
  const double vx = s.vx;
  const double vx2 = vx * vx;

  front->setZero();
  (*front)[3] = -1.0;
  (*front)[4] = -(s.vy + p.l1 * s.r) / vx2;
  (*front)[5] = 1.0 / vx;
  (*front)[6] = p.l1 / vx;

  rear->setZero();
  (*rear)[4] = -(s.vy - p.l2 * s.r) / vx2;
  (*rear)[5] = 1.0 / vx;
  (*rear)[6] = -p.l2 / vx;
}

Eigen::Vector2d steady_state_lateral(double delta, double vx,
                                     const VehicleParams& p) {
  const double cf2 = 2.0 * p.c_alpha_f;
  const double cr2 = 2.0 * p.c_alpha_r;
  Eigen::Matrix2d A;
  A << -(cf2 + cr2) / (p.mass * vx),
      (cr2 * p.l2 - cf2 * p.l1) / (p.mass * vx) - vx,
      -(cf2 * p.l1 - cr2 * p.l2) / (p.yaw_inertia * vx),
      -(cf2 * p.l1 * p.l1 + cr2 * p.l2 * p.l2) / (p.yaw_inertia * vx);
  Eigen::Vector2d b;
  b << cf2 / p.mass * delta, cf2 * p.l1 / p.yaw_inertia * delta;
  return A.fullPivLu().solve(-b);
}

}  // namespace hmpc
