#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "hmpc/dynamics.hpp"

namespace hmpc {

/// Observed obstacle at the planning instant. l1/l2 describe the obstacle's
/// circle-decomposition geometry and default to the ego values.
struct ObstacleState {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;        // speed along heading (m/s), >= 0
  double heading = 0.0;  // rad
  double l1 = 1.180;
  double l2 = 1.770;
};

/// Predicted obstacle trajectory over the planning horizon: one pose,
/// velocity and 3x3 covariance per timestep t_1..t_n.
struct PredictedObstacle {
  int id = 0;
  double l1 = 1.180;
  double l2 = 1.770;
  std::vector<Eigen::Vector3d> poses;       // (x, y, heading)
  std::vector<double> velocities;           // m/s
  std::vector<Eigen::Matrix3d> covariances;
  std::vector<double> times;                // t_i = sum of dt_1..dt_i
};

struct PredictionConfig {
  double sigma0 = 0.2;         // initial position stddev (m)
  double sigma_growth = 0.1;   // position stddev growth (m / sqrt(s))
  double heading_sigma = 0.05; // constant heading stddev (rad)
};

/// Constant-velocity, constant-heading prediction with linearly growing
/// position variance: pose_i advances v * t_i along the heading and the
/// position covariance entries are sigma0^2 + sigma_growth^2 * t_i.
PredictedObstacle predict(const ObstacleState& obs, int n,
                          std::span<const double> dt_schedule,
                          const PredictionConfig& config = {});

}  // namespace hmpc
