#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <vector>

#include "hmpc/dynamics.hpp"
#include "hmpc/prediction.hpp"

namespace hmpc {

/// Two-disc decomposition of a vehicle footprint: one disc centered l1 ahead
/// of the reference pose along the heading, one l2 behind.
struct CirclePair {
  Eigen::Vector2d front;
  Eigen::Vector2d rear;
  double radius = 0.0;
};

/// Index of an (ego disc, obstacle disc) pair: ego front/rear x obs front/rear.
enum class DiscPair : int { ff = 0, fr = 1, rf = 2, rr = 3 };

CirclePair circle_centers(const Eigen::Vector3d& pose, double l1, double l2,
                          double radius);

/// Distances between the four ego/obstacle disc-center pairs, in the order
/// (ff, fr, rf, rr). Feasible when every distance >= 2R.
std::array<double, 4> pairwise_clearances(const Eigen::Vector3d& ego_pose,
                                          const Eigen::Vector3d& obs_pose,
                                          const VehicleParams& params);

/// Same, with explicit obstacle disc geometry.
std::array<double, 4> pairwise_clearances(const Eigen::Vector3d& ego_pose,
                                          double ego_l1, double ego_l2,
                                          const Eigen::Vector3d& obs_pose,
                                          double obs_l1, double obs_l2);

/// One collision inequality: the ego disc selected by `pair` at timestep
/// `step` must stay at least `clearance` away from the fixed obstacle disc
/// center. `obstacle_step` differs from `step` only in cross-pairing mode.
struct CollisionConstraint {
  int step = 0;           // ego timestep index, 1-based
  int obstacle_id = 0;
  int obstacle_step = 0;  // obstacle timestep index, 1-based
  DiscPair pair = DiscPair::ff;
  Eigen::Vector2d obs_center = Eigen::Vector2d::Zero();
  double clearance = 0.0;  // required center distance (2R, possibly inflated)
};

struct CollisionConstraintSet {
  int horizon = 0;
  std::vector<CollisionConstraint> rows;
};

struct CollisionOptions {
  bool cross_pairing = false;   // diagnostic: pair every ego step with every
                                // obstacle step (4*n^2 rows per obstacle)
  double inflation_k = 0.0;     // clearance += k * position stddev
};

/// Builds the constraint set pairing ego timestep i with each obstacle's
/// predicted disc centers at the same index (4 rows per step and obstacle).
CollisionConstraintSet generate_constraints(
    int n, std::span<const PredictedObstacle> predictions,
    const VehicleParams& params, const CollisionOptions& options = {});

/// True if `pose` is the ego disc owner for the pair's ego side.
inline bool pair_uses_ego_front(DiscPair p) {
  return p == DiscPair::ff || p == DiscPair::fr;
}
inline bool pair_uses_obs_front(DiscPair p) {
  return p == DiscPair::ff || p == DiscPair::rf;
}

}  // namespace hmpc
