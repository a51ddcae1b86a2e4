#pragma once

#include <optional>
#include <vector>

#include "hmpc/prediction.hpp"
#include "hmpc/problem.hpp"
#include "hmpc/solve.hpp"
#include "hmpc/xt.hpp"

namespace hmpc {

/// Straight multi-lane road: lane 0 spans [y_min, y_min + lane_width).
struct RoadModel {
  double y_min = 0.0;
  double lane_width = 3.75;
  int lane_count = 2;

  double y_max() const { return y_min + lane_width * lane_count; }
  int lane_of(double y) const {
    const int lane = static_cast<int>((y - y_min) / lane_width);
    return std::clamp(lane, 0, lane_count - 1);
  }
  double lane_center(int lane) const {
    return y_min + (lane + 0.5) * lane_width;
  }
  LateralInterval lane_interval(int lane) const {
    return {y_min + lane * lane_width, y_min + (lane + 1) * lane_width};
  }
};

struct WorldSnapshot {
  double time = 0.0;
  VehicleState ego;
  std::vector<ObstacleState> obstacles;
  RoadModel road;
};

struct PlanTimings {
  double predict_s = 0.0;
  double heuristic_s = 0.0;
  double build_s = 0.0;
  double solve_s = 0.0;
  double total_s = 0.0;
};

struct PlanCycleRecord {
  double time = 0.0;
  std::vector<double> v_pre;
  TrajectorySolution solution;
  int constraint_count = 0;
  PlanTimings timings;
  int target_lane = 0;
  int current_lane = 0;
  bool fallback = false;  // solver infeasible; braking trajectory substituted
  int obstacles_in_range = 0;
};

enum class CorridorMode {
  per_lane_best,  // search each candidate lane, take the cheapest profile
  lane_union,     // single search over the current + adjacent lane union
};

struct PlannerConfig {
  int n = 20;
  double dt = 0.5;
  double sensing_ahead = 300.0;
  double sensing_behind = 100.0;
  Weights weights;
  OptimizerLimits limits;
  PredictionConfig prediction;
  XTConfig xt;
  CollisionOptions collision;
  SolverSettings solver;
  CorridorMode corridor_mode = CorridorMode::per_lane_best;
  double lane_change_seed_duration = 4.0;  // s, lateral ramp in the cold seed
  double rear_gap_base = 25.0;   // m, adjacent lane rejected when a rear
  double rear_gap_per_closing = 2.0;  // vehicle is closer than base + k*closing

  std::vector<double> dt_schedule() const {
    return std::vector<double>(static_cast<std::size_t>(n), dt);
  }
};

/// One receding-horizon cycle: sensing filter, prediction, heuristic speed
/// search, problem assembly and a warm-started solve. On solver
/// infeasibility the record carries an in-lane braking trajectory and the
/// fallback flag.
PlanCycleRecord plan(const WorldSnapshot& snapshot,
                     const PlanCycleRecord* prev, const PlannerConfig& config,
                     const VehicleParams& params);

/// Obstacles within the sensing window (ahead/behind the ego).
std::vector<ObstacleState> sensing_filter(const WorldSnapshot& snapshot,
                                          const PlannerConfig& config);

}  // namespace hmpc
