#include "hmpc/collision.hpp"

#include <cmath>

namespace hmpc {

CirclePair circle_centers(const Eigen::Vector3d& pose, double l1, double l2,
                          double radius) {
  const Eigen::Vector2d heading(std::cos(pose[2]), std::sin(pose[2]));
  CirclePair pair;
  pair.front = pose.head<2>() + l1 * heading;
  pair.rear = pose.head<2>() - l2 * heading;
  pair.radius = radius;
  return pair;
}

std::array<double, 4> pairwise_clearances(const Eigen::Vector3d& ego_pose,
                                          double ego_l1, double ego_l2,
                                          const Eigen::Vector3d& obs_pose,
                                          double obs_l1, double obs_l2) {
  const CirclePair ego = circle_centers(ego_pose, ego_l1, ego_l2, 0.0);
  const CirclePair obs = circle_centers(obs_pose, obs_l1, obs_l2, 0.0);
  return {
      (ego.front - obs.front).norm(),
      (ego.front - obs.rear).norm(),
      (ego.rear - obs.front).norm(),
      (ego.rear - obs.rear).norm(),
  };
}

std::array<double, 4> pairwise_clearances(const Eigen::Vector3d& ego_pose,
                                          const Eigen::Vector3d& obs_pose,
                                          const VehicleParams& params) {
  return pairwise_clearances(ego_pose, params.l1, params.l2, obs_pose,
                             params.l1, params.l2);
}

CollisionConstraintSet generate_constraints(
    int n, std::span<const PredictedObstacle> predictions,
    const VehicleParams& params, const CollisionOptions& options) {
  CollisionConstraintSet set;
  set.horizon = n;
  for (const PredictedObstacle& pred : predictions) {
    if (static_cast<int>(pred.poses.size()) != n) {
      throw DomainError("generate_constraints: prediction horizon mismatch");
    }
  }

  const double base_clearance = 2.0 * params.circle_radius;
  set.rows.reserve(4 * static_cast<std::size_t>(n) * predictions.size() *
                   (options.cross_pairing ? n : 1));

  for (const PredictedObstacle& pred : predictions) {
    for (int i = 1; i <= n; ++i) {
      const int k_begin = options.cross_pairing ? 1 : i;
      const int k_end = options.cross_pairing ? n : i;
      for (int k = k_begin; k <= k_end; ++k) {
        const Eigen::Vector3d& pose = pred.poses[k - 1];
        const CirclePair obs = circle_centers(pose, pred.l1, pred.l2, 0.0);
        double clearance = base_clearance;
        if (options.inflation_k > 0.0) {
          clearance += options.inflation_k *
                       std::sqrt(std::max(0.0, pred.covariances[k - 1](0, 0)));
        }
        for (int p = 0; p < 4; ++p) {
          CollisionConstraint row;
          row.step = i;
          row.obstacle_id = pred.id;
          row.obstacle_step = k;
          row.pair = static_cast<DiscPair>(p);
          row.obs_center = pair_uses_obs_front(row.pair) ? obs.front : obs.rear;
          row.clearance = clearance;
          set.rows.push_back(row);
        }
      }
    }
  }
  return set;
}

}  // namespace hmpc
