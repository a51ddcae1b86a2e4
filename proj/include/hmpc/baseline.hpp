#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hmpc/planner.hpp"

namespace hmpc {

struct BaselineConfig {
  double dt = 0.5;
  int n = 20;                      // prediction/collision horizon steps
  double desired_speed = 33.3;     // m/s
  double duration_min = 2.0;       // s, lateral maneuver durations
  double duration_max = 8.0;
  double duration_step = 1.0;
  std::vector<double> terminal_speed_offsets{0.0, -2.5, -5.0, -7.5, -10.0};
  double a_max = 2.0;
  double kappa_max = 0.2;          // 1/m
  double lane_change_trigger_gap = 60.0;  // m
  double w_jerk = 0.1;
  double w_time = 1.0;
  double w_speed = 1.0;
  double sensing_ahead = 300.0;
  double sensing_behind = 100.0;
  PredictionConfig prediction;
};

/// Sampled trajectory on the 0.5 s grid, in world coordinates.
struct BaselineTrajectory {
  std::vector<double> times;            // t_1..t_n
  std::vector<Eigen::Vector3d> poses;   // (x, y, heading)
  std::vector<double> speeds;           // path speed
  std::vector<double> accels;           // longitudinal acceleration
  int target_lane = 0;
  bool fallback_braking = false;
  double cost = 0.0;
};

/// Frenet-frame sampling planner used as the comparison method: quintic
/// lateral polynomials toward lane centers over a set of durations, quartic
/// velocity-keeping longitudinal profiles over terminal speeds, circle-model
/// collision filtering against the predicted obstacle trajectories, and a
/// jerk + time + terminal-speed-error selection cost. Lane-change candidates
/// are generated only when the lead gap drops under the trigger and the lead
/// is slower than the desired speed. When every candidate is infeasible the
/// planner returns an in-lane braking trajectory.
BaselineTrajectory baseline_frenet_plan(const WorldSnapshot& snapshot,
                                        const BaselineConfig& config,
                                        const VehicleParams& params);

}  // namespace hmpc
