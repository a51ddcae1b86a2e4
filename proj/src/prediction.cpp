#include "hmpc/prediction.hpp"

#include <cmath>

namespace hmpc {

PredictedObstacle predict(const ObstacleState& obs, int n,
                          std::span<const double> dt_schedule,
                          const PredictionConfig& config) {
  if (n < 1) {
    throw DomainError("predict: horizon must have at least one step");
  }
  if (static_cast<int>(dt_schedule.size()) != n) {
    throw DomainError("predict: dt_schedule must have exactly n entries");
  }
  if (obs.v < 0.0) {
    throw DomainError("predict: obstacle speed must be non-negative");
  }

  PredictedObstacle out;
  out.id = obs.id;
  out.l1 = obs.l1;
  out.l2 = obs.l2;
  out.poses.reserve(n);
  out.velocities.assign(n, obs.v);
  out.covariances.reserve(n);
  out.times.reserve(n);

  const double cos_h = std::cos(obs.heading);
  const double sin_h = std::sin(obs.heading);
  double t = 0.0;
  for (int i = 0; i < n; ++i) {
    t += dt_schedule[i];
    out.times.push_back(t);
    out.poses.emplace_back(obs.x + obs.v * t * cos_h,
                           obs.y + obs.v * t * sin_h, obs.heading);
    const double pos_var =
        config.sigma0 * config.sigma0 + config.sigma_growth * config.sigma_growth * t;
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    cov(0, 0) = pos_var;
    cov(1, 1) = pos_var;
    cov(2, 2) = config.heading_sigma * config.heading_sigma;
    out.covariances.push_back(cov);
  }
  return out;
}

}  // namespace hmpc
