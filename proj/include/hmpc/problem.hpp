#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hmpc/collision.hpp"
#include "hmpc/dynamics.hpp"

namespace hmpc {

inline constexpr double kInfinity = 1e20;

struct Weights {
  double accel = 50.0;       // w1, on a^2
  double steer_rate = 100.0; // w2, on gamma^2
  double speed = 10.0;       // w3, on (vx - v_pre)^2
};

struct OptimizerLimits {
  double v_max = 33.3;          // m/s (120 km/h)
  double a_max = 2.0;           // m/s^2
  double gamma_max = 1.5707963267948966;  // pi/2 rad/s
  double delta_max = 0.6;       // rad
  double theta_max = 0.6;       // rad
  double alpha_f_max = 0.052;   // rad
  double alpha_r_max = 0.052;   // rad
};

/// Discrete-time trajectory NLP over states X_1..X_n and inputs U_1..U_{n-1}.
///
/// State X_i lives at time t_i = dt_1 + ... + dt_i; transition i maps X_{i-1}
/// to X_i under input U_min(i, n-1) held over dt_i (the final transition
/// holds the last input). Decision variables are stacked per step as
/// [X_1, U_1, X_2, U_2, ..., U_{n-1}, X_n].
struct PlanningProblem {
  int n = 0;
  std::vector<double> dt;
  VehicleState x0;
  std::vector<double> v_pre;
  CollisionConstraintSet collisions;
  VehicleParams params;
  Weights weights;
  OptimizerLimits limits;
  double y_min = 0.0;  // road lateral bounds (disc-center inset applied here)
  double y_max = 7.5;
  double vx_lower = 2.0;  // optimizer floor, kept above params.vx_floor so
                          // RK4 stages stay in the tire-model domain
  bool initial_state_infeasible = false;

  int num_vars() const { return 9 * n - 2; }
  int state_offset(int i) const { return (i - 1) * 9; }      // i in 1..n
  int input_offset(int i) const { return (i - 1) * 9 + 7; }  // i in 1..n-1
  int input_for_step(int i) const { return std::min(i, n - 1); }
  int num_eq() const { return 7 * n; }
  int num_safety() const { return 6 * n; }
  int num_ineq() const {
    return num_safety() + static_cast<int>(collisions.rows.size());
  }

  Eigen::VectorXd lower_bounds() const;
  Eigen::VectorXd upper_bounds() const;

  Eigen::VectorXd pack(std::span<const VehicleState> states,
                       std::span<const ControlInput> inputs) const;
  void unpack(const Eigen::VectorXd& z, std::vector<VehicleState>* states,
              std::vector<ControlInput>* inputs) const;
};

struct ProblemConfig {
  Weights weights;
  OptimizerLimits limits;
  double road_y_min = 0.0;
  double road_y_max = 7.5;
  CollisionOptions collision;
};

/// Assembles the NLP: dynamics equalities, rollover/slip inequalities,
/// time-matched collision rows and box bounds. An initial state already
/// violating the box bounds is flagged but the problem is still built.
PlanningProblem build_problem(const VehicleState& x0,
                              std::span<const double> v_pre,
                              std::span<const double> dt_schedule,
                              std::span<const PredictedObstacle> predictions,
                              const VehicleParams& params,
                              const ProblemConfig& config);

/// Sum of w1*a^2 + w2*gamma^2 over inputs plus w3*(vx - v_pre)^2 over states.
double trajectory_cost(std::span<const VehicleState> states,
                       std::span<const ControlInput> inputs,
                       std::span<const double> v_pre, const Weights& weights);

/// Everything the SQP iteration needs at one point. Inequality rows are
/// ordered: per step i = 1..n the six safety rows (roll +/-, front slip +/-,
/// rear slip +/-), then one row per collision constraint. Collision rows are
/// scaled to 1 - d^2/clearance^2 <= 0; safety rows are in natural units.
struct ProblemEvaluation {
  double objective = 0.0;
  Eigen::VectorXd grad;
  Eigen::VectorXd c_eq;
  Eigen::VectorXd c_in;
  Eigen::SparseMatrix<double, Eigen::RowMajor> jac_eq;
  Eigen::SparseMatrix<double, Eigen::RowMajor> jac_in;
  bool dynamics_ok = true;
  std::string dynamics_error;
};

/// Evaluates cost, constraints and (optionally) Jacobians at z. Returns false
/// with dynamics_ok unset when an RK4 stage leaves the tire-model domain; the
/// remaining fields are not usable in that case.
bool evaluate_problem(const PlanningProblem& problem, const Eigen::VectorXd& z,
                      bool need_jacobians, ProblemEvaluation* out);

/// Index sets describing one collision row for screening decisions.
double collision_row_distance(const PlanningProblem& problem,
                              const Eigen::VectorXd& z, int row_index);

}  // namespace hmpc
