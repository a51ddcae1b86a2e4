#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace hmpc {

inline constexpr double kGravity = 9.81;  // m/s^2

/// Thrown when an operation is evaluated outside its validity domain.
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Ego vehicle state [x, y, theta, delta, vx, vy, r].
///
/// x, y: pose in the world frame (m); theta: heading (rad);
/// delta: front steering angle (rad); vx, vy: body-frame velocities (m/s);
/// r: yaw rate (rad/s).
struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double delta = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double r = 0.0;

  Eigen::Matrix<double, 7, 1> to_vector() const {
    Eigen::Matrix<double, 7, 1> v;
    v << x, y, theta, delta, vx, vy, r;
    return v;
  }
  static VehicleState from_vector(const Eigen::Matrix<double, 7, 1>& v) {
    return {v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
  }
};

/// Control input: steering-angle rate gamma (rad/s) and longitudinal
/// acceleration accel (m/s^2).
struct ControlInput {
  double gamma = 0.0;
  double accel = 0.0;
};

/// Time derivative of each VehicleState component.
struct StateDerivative {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double delta = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double r = 0.0;

  Eigen::Matrix<double, 7, 1> to_vector() const {
    Eigen::Matrix<double, 7, 1> v;
    v << x, y, theta, delta, vx, vy, r;
    return v;
  }
};

/// Physical parameters of the single-track model plus the geometry used by
/// the safety and collision layers.
struct VehicleParams {
  double c_alpha_f = 250000.0;  // front cornering stiffness (N/rad)
  double c_alpha_r = 250000.0;  // rear cornering stiffness (N/rad)
  double l1 = 1.180;            // CG to front axle (m)
  double l2 = 1.770;            // CG to rear axle (m)
  double mass = 1590.0;         // kg
  double yaw_inertia = 2687.0;  // kg m^2
  double cg_height = 0.720;     // m
  double track_width = 1.875;   // m
  double rollover_eta = 0.5;    // rollover safety factor, (0, 1]
  double circle_radius = 1.3;   // collision circle radius (m)
  double vx_floor = 1.0;        // minimum speed for the tire model (m/s)

  /// Lateral-acceleration bound W*g/(2*h_g)*eta implied by the rollover
  /// safety factor.
  double rollover_accel_limit() const {
    return track_width * kGravity / (2.0 * cg_height) * rollover_eta;
  }

  /// Alternative collision radius (l1+l2)/2 derived from the wheelbase.
  double wheelbase_circle_radius() const { return 0.5 * (l1 + l2); }

  /// Throws DomainError if any parameter is outside its admissible range.
  void validate() const;
};

/// Front/rear signed slip angles (rad).
struct SlipAngles {
  double front = 0.0;
  double rear = 0.0;
};

/// Continuous-time dynamics of the linear-tire single-track model.
/// Requires state.vx >= params.vx_floor (the tire terms divide by vx).
StateDerivative derivative(const VehicleState& state, const ControlInput& input,
                           const VehicleParams& params);

/// Forward-Euler step: state + dt * derivative(state, input).
VehicleState step_euler(const VehicleState& state, const ControlInput& input,
                        const VehicleParams& params, double dt);

/// Classical fourth-order Runge-Kutta step with the input held constant over
/// the step. Every stage state must satisfy vx >= vx_floor; a violating stage
/// is reported in the DomainError message.
VehicleState step_rk4(const VehicleState& state, const ControlInput& input,
                      const VehicleParams& params, double dt);

/// Body-frame lateral acceleration used by the rollover constraint:
/// -vx*r + 2*[C_f/m*(delta - (vy + l1*r)/vx) + C_r*(l2*r - vy)/(m*vx)].
double lateral_acceleration(const VehicleState& state,
                            const VehicleParams& params);

/// Signed slip angles: front (vy + l1*r)/vx - delta, rear (vy - l2*r)/vx.
SlipAngles slip_angles(const VehicleState& state, const VehicleParams& params);

// --- derivative information for the optimizer ----------------------------

using StateJacobian = Eigen::Matrix<double, 7, 7>;
using InputJacobian = Eigen::Matrix<double, 7, 2>;

/// Jacobians of derivative() with respect to state and input.
void derivative_jacobian(const VehicleState& state, const ControlInput& input,
                         const VehicleParams& params, StateJacobian* dfdx,
                         InputJacobian* dfdu);

/// Non-throwing RK4 step. Returns false when any stage dips below vx_floor;
/// *out is untouched in that case.
bool try_step_rk4(const VehicleState& state, const ControlInput& input,
                  const VehicleParams& params, double dt, VehicleState* out);

/// RK4 step together with its exact Jacobians (chain rule through the four
/// stages). Returns false on a stage domain violation.
bool step_rk4_jacobian(const VehicleState& state, const ControlInput& input,
                       const VehicleParams& params, double dt,
                       VehicleState* out, StateJacobian* dxnext_dx,
                       InputJacobian* dxnext_du);

/// Gradient of lateral_acceleration() with respect to the 7 state components.
Eigen::Matrix<double, 7, 1> lateral_acceleration_gradient(
    const VehicleState& state, const VehicleParams& params);

/// Gradients of the signed slip angles with respect to the state.
void slip_angle_gradients(const VehicleState& state,
                          const VehicleParams& params,
                          Eigen::Matrix<double, 7, 1>* front,
                          Eigen::Matrix<double, 7, 1>* rear);

/// Steady-state (vy, r) for a held steering angle and speed, from the linear
/// lateral subsystem. Used by tests to start maneuvers without a transient.
Eigen::Vector2d steady_state_lateral(double delta, double vx,
                                     const VehicleParams& params);

}  // namespace hmpc
