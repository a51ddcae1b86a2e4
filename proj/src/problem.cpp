#include "hmpc/problem.hpp"

#include <cmath>

namespace hmpc {

Eigen::VectorXd PlanningProblem::lower_bounds() const {
  Eigen::VectorXd lb = Eigen::VectorXd::Constant(num_vars(), -kInfinity);
  for (int i = 1; i <= n; ++i) {
    const int off = state_offset(i);
    lb[off + 1] = y_min;
    lb[off + 2] = -limits.theta_max;
    lb[off + 3] = -limits.delta_max;
    lb[off + 4] = vx_lower;
  }
  for (int i = 1; i <= n - 1; ++i) {
    const int off = input_offset(i);
    lb[off + 0] = -limits.gamma_max;
    lb[off + 1] = -limits.a_max;
  }
  return lb;
}

Eigen::VectorXd PlanningProblem::upper_bounds() const {
  Eigen::VectorXd ub = Eigen::VectorXd::Constant(num_vars(), kInfinity);
  for (int i = 1; i <= n; ++i) {
    const int off = state_offset(i);
    ub[off + 1] = y_max;
    ub[off + 2] = limits.theta_max;
    ub[off + 3] = limits.delta_max;
    ub[off + 4] = limits.v_max;
  }
  for (int i = 1; i <= n - 1; ++i) {
    const int off = input_offset(i);
    ub[off + 0] = limits.gamma_max;
    ub[off + 1] = limits.a_max;
  }
  return ub;
}

Eigen::VectorXd PlanningProblem::pack(std::span<const VehicleState> states,
                                      std::span<const ControlInput> inputs) const {
  Eigen::VectorXd z(num_vars());
  for (int i = 1; i <= n; ++i) {
    z.segment<7>(state_offset(i)) = states[i - 1].to_vector();
  }
  for (int i = 1; i <= n - 1; ++i) {
    z[input_offset(i) + 0] = inputs[i - 1].gamma;
    z[input_offset(i) + 1] = inputs[i - 1].accel;
  }
  return z;
}

void PlanningProblem::unpack(const Eigen::VectorXd& z,
                             std::vector<VehicleState>* states,
                             std::vector<ControlInput>* inputs) const {
  states->resize(n);
  inputs->resize(n - 1);
  for (int i = 1; i <= n; ++i) {
    (*states)[i - 1] =
        VehicleState::from_vector(z.segment<7>(state_offset(i)));
  }
  for (int i = 1; i <= n - 1; ++i) {
    (*inputs)[i - 1] = {z[input_offset(i) + 0], z[input_offset(i) + 1]};
  }
}

PlanningProblem build_problem(const VehicleState& x0,
                              std::span<const double> v_pre,
                              std::span<const double> dt_schedule,
                              std::span<const PredictedObstacle> predictions,
                              const VehicleParams& params,
                              const ProblemConfig& config) {
  if (v_pre.size() != dt_schedule.size() || v_pre.size() < 2) {
    throw DomainError("build_problem: v_pre/dt_schedule length mismatch");
  }
  PlanningProblem problem;
  problem.n = static_cast<int>(v_pre.size());
  problem.dt.assign(dt_schedule.begin(), dt_schedule.end());
  problem.x0 = x0;
  problem.v_pre.assign(v_pre.begin(), v_pre.end());
  problem.params = params;
  problem.weights = config.weights;
  problem.limits = config.limits;
  problem.y_min = config.road_y_min + params.circle_radius;
  problem.y_max = config.road_y_max - params.circle_radius;
  const double max_dt =
      *std::max_element(problem.dt.begin(), problem.dt.end());
  problem.vx_lower = params.vx_floor + config.limits.a_max * max_dt;
  problem.collisions =
      generate_constraints(problem.n, predictions, params, config.collision);

  problem.initial_state_infeasible =
      x0.y < problem.y_min || x0.y > problem.y_max ||
      x0.vx < params.vx_floor || x0.vx > config.limits.v_max ||
      std::abs(x0.delta) > config.limits.delta_max;
  return problem;
}

double trajectory_cost(std::span<const VehicleState> states,
                       std::span<const ControlInput> inputs,
                       std::span<const double> v_pre, const Weights& w) {
  double cost = 0.0;
  for (const ControlInput& u : inputs) {
    cost += w.accel * u.accel * u.accel + w.steer_rate * u.gamma * u.gamma;
  }
  for (std::size_t i = 0; i < states.size(); ++i) {
    const double dv = states[i].vx - v_pre[i];
    cost += w.speed * dv * dv;
  }
  return cost;
}

bool evaluate_problem(const PlanningProblem& problem, const Eigen::VectorXd& z,
                      bool need_jacobians, ProblemEvaluation* out) {
  const int n = problem.n;
  const VehicleParams& params = problem.params;
  const int nv = problem.num_vars();

  out->objective = 0.0;
  out->grad = Eigen::VectorXd::Zero(nv);
  out->c_eq.resize(problem.num_eq());
  out->c_in.resize(problem.num_ineq());
  out->dynamics_ok = true;
  out->dynamics_error.clear();

  std::vector<Eigen::Triplet<double>> eq_trips;
  std::vector<Eigen::Triplet<double>> in_trips;
  if (need_jacobians) {
    eq_trips.reserve(static_cast<std::size_t>(problem.num_eq()) * 18);
    in_trips.reserve(static_cast<std::size_t>(problem.num_ineq()) * 4);
  }

  // Cost and its gradient.
  for (int i = 1; i <= n; ++i) {
    const int off = problem.state_offset(i);
    const double dv = z[off + 4] - problem.v_pre[i - 1];
    out->objective += problem.weights.speed * dv * dv;
    out->grad[off + 4] += 2.0 * problem.weights.speed * dv;
  }
  for (int i = 1; i <= n - 1; ++i) {
    const int off = problem.input_offset(i);
    const double gamma = z[off + 0];
    const double accel = z[off + 1];
    out->objective += problem.weights.steer_rate * gamma * gamma +
                      problem.weights.accel * accel * accel;
    out->grad[off + 0] += 2.0 * problem.weights.steer_rate * gamma;
    out->grad[off + 1] += 2.0 * problem.weights.accel * accel;
  }

  // Dynamics equalities: X_i - rk4(X_{i-1}, U_{min(i, n-1)}, dt_i) = 0.
  for (int i = 1; i <= n; ++i) {
    const VehicleState prev =
        (i == 1) ? problem.x0
                 : VehicleState::from_vector(
                       z.segment<7>(problem.state_offset(i - 1)));
    const int ui = problem.input_for_step(i);
    const ControlInput input{z[problem.input_offset(ui) + 0],
                             z[problem.input_offset(ui) + 1]};
    VehicleState next;
    StateJacobian dfdx;
    InputJacobian dfdu;
    bool ok;
    if (need_jacobians) {
      ok = step_rk4_jacobian(prev, input, params, problem.dt[i - 1], &next,
                             &dfdx, &dfdu);
    } else {
      ok = try_step_rk4(prev, input, params, problem.dt[i - 1], &next);
    }
    if (!ok) {
      out->dynamics_ok = false;
      out->dynamics_error =
          "transition " + std::to_string(i) + " left the tire-model domain";
      return false;
    }
    const int row0 = 7 * (i - 1);
    out->c_eq.segment<7>(row0) =
        z.segment<7>(problem.state_offset(i)) - next.to_vector();
    if (need_jacobians) {
      const int xi_off = problem.state_offset(i);
      for (int r = 0; r < 7; ++r) {
        eq_trips.emplace_back(row0 + r, xi_off + r, 1.0);
      }
      if (i > 1) {
        const int xp_off = problem.state_offset(i - 1);
        for (int r = 0; r < 7; ++r) {
          for (int c = 0; c < 7; ++c) {
            const double v = dfdx(r, c);
            if (v != 0.0) eq_trips.emplace_back(row0 + r, xp_off + c, -v);
          }
        }
      }
      const int u_off = problem.input_offset(ui);
      for (int r = 0; r < 7; ++r) {
        for (int c = 0; c < 2; ++c) {
          const double v = dfdu(r, c);
          if (v != 0.0) eq_trips.emplace_back(row0 + r, u_off + c, -v);
        }
      }
    }
  }

  // Safety rows: rollover two-sided, slip angles two-sided.
  const double roll_limit = params.rollover_accel_limit();
  for (int i = 1; i <= n; ++i) {
    const int off = problem.state_offset(i);
    const VehicleState s = VehicleState::from_vector(z.segment<7>(off));
    if (s.vx < params.vx_floor) {
      out->dynamics_ok = false;
      out->dynamics_error =
          "state " + std::to_string(i) + " below the tire-model speed floor";
      return false;
    }
    const double ay = lateral_acceleration(s, params);
    const SlipAngles slip = slip_angles(s, params);
    const int row0 = 6 * (i - 1);
    out->c_in[row0 + 0] = ay - roll_limit;
    out->c_in[row0 + 1] = -ay - roll_limit;
    out->c_in[row0 + 2] = slip.front - problem.limits.alpha_f_max;
    out->c_in[row0 + 3] = -slip.front - problem.limits.alpha_f_max;
    out->c_in[row0 + 4] = slip.rear - problem.limits.alpha_r_max;
    out->c_in[row0 + 5] = -slip.rear - problem.limits.alpha_r_max;
    if (need_jacobians) {
      const Eigen::Matrix<double, 7, 1> g_ay =
          lateral_acceleration_gradient(s, params);
      Eigen::Matrix<double, 7, 1> g_f, g_r;
      slip_angle_gradients(s, params, &g_f, &g_r);
      for (int c = 3; c < 7; ++c) {  // only delta, vx, vy, r appear
        if (g_ay[c] != 0.0) {
          in_trips.emplace_back(row0 + 0, off + c, g_ay[c]);
          in_trips.emplace_back(row0 + 1, off + c, -g_ay[c]);
        }
        if (g_f[c] != 0.0) {
          in_trips.emplace_back(row0 + 2, off + c, g_f[c]);
          in_trips.emplace_back(row0 + 3, off + c, -g_f[c]);
        }
        if (g_r[c] != 0.0) {
          in_trips.emplace_back(row0 + 4, off + c, g_r[c]);
          in_trips.emplace_back(row0 + 5, off + c, -g_r[c]);
        }
      }
    }
  }

  // Collision rows, scaled as 1 - d^2 / clearance^2 <= 0.
  const int col_base = problem.num_safety();
  for (std::size_t k = 0; k < problem.collisions.rows.size(); ++k) {
    const CollisionConstraint& row = problem.collisions.rows[k];
    const int off = problem.state_offset(row.step);
    const double x = z[off + 0];
    const double y = z[off + 1];
    const double theta = z[off + 2];
    const double s = pair_uses_ego_front(row.pair) ? params.l1 : -params.l2;
    const double cos_t = std::cos(theta);
    const double sin_t = std::sin(theta);
    const Eigen::Vector2d center(x + s * cos_t, y + s * sin_t);
    const Eigen::Vector2d diff = center - row.obs_center;
    const double c2 = row.clearance * row.clearance;
    out->c_in[col_base + static_cast<int>(k)] = 1.0 - diff.squaredNorm() / c2;
    if (need_jacobians) {
      const double scale = -2.0 / c2;
      const int r = col_base + static_cast<int>(k);
      in_trips.emplace_back(r, off + 0, scale * diff[0]);
      in_trips.emplace_back(r, off + 1, scale * diff[1]);
      in_trips.emplace_back(
          r, off + 2, scale * (diff[0] * (-s * sin_t) + diff[1] * (s * cos_t)));
    }
  }

  if (need_jacobians) {
    out->jac_eq.resize(problem.num_eq(), nv);
    out->jac_eq.setFromTriplets(eq_trips.begin(), eq_trips.end());
    out->jac_in.resize(problem.num_ineq(), nv);
    out->jac_in.setFromTriplets(in_trips.begin(), in_trips.end());
  }
  return true;
}

double collision_row_distance(const PlanningProblem& problem,
                              const Eigen::VectorXd& z, int row_index) {
  const CollisionConstraint& row = problem.collisions.rows[row_index];
  const int off = problem.state_offset(row.step);
  const double s =
      pair_uses_ego_front(row.pair) ? problem.params.l1 : -problem.params.l2;
  const Eigen::Vector2d center(z[off + 0] + s * std::cos(z[off + 2]),
                               z[off + 1] + s * std::sin(z[off + 2]));
  return (center - row.obs_center).norm();
}

}  // namespace hmpc
