#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hmpc/problem.hpp"
#include "hmpc/qp.hpp"

namespace hmpc {

enum class SolveStatus { converged, max_iter, infeasible };
const char* to_string(SolveStatus status);

struct SolverSettings {
  int max_iterations = 200;       // major (SQP) iterations
  double feasibility_tol = 1e-6;  // on scaled constraint values
  double optimality_tol = 1e-4;   // stationarity residual
  double screen_distance = 50.0;  // m; collision rows nearer than this enter
                                  // the QP (all rows are checked for
                                  // feasibility regardless)
  double elastic_penalty = 1e4;   // l1 penalty when a QP needs relaxing
  bool soft_collisions = false;   // keep collision rows slack-augmented with
                                  // an exact penalty (graceful degradation)
  QPSettings qp;
};

struct InitialGuess {
  std::vector<VehicleState> states;   // X_1..X_n
  std::vector<ControlInput> inputs;   // U_1..U_{n-1}
};

struct TrajectorySolution {
  std::vector<VehicleState> states;
  std::vector<ControlInput> inputs;
  double objective = 0.0;
  SolveStatus status = SolveStatus::infeasible;
  int iterations = 0;
  double max_violation = 0.0;  // scaled, over all constraint rows
  double wall_time_s = 0.0;
  std::string diagnostic;      // most-violated constraints when infeasible
};

/// SQP with an interior-point QP subproblem: exact first derivatives, the
/// exact (diagonal) cost Hessian plus adaptive Levenberg regularization, an
/// l1 merit line search with a second-order correction, and slack relaxation
/// when a linearization is locally infeasible. Deterministic for identical
/// inputs.
TrajectorySolution solve(const PlanningProblem& problem,
                         const std::optional<InitialGuess>& warm_start = {},
                         const SolverSettings& settings = {});

/// Shifts a previous solution one step (last state and input duplicated) for
/// use as the next cycle's warm start. solve() clips any guess into bounds.
InitialGuess shift_warm_start(const TrajectorySolution& prev,
                              std::span<const double> dt_schedule);

/// Straight constant-speed guess used when no warm start is available.
InitialGuess straight_line_guess(const PlanningProblem& problem);

}  // namespace hmpc
