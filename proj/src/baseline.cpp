#include "hmpc/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hmpc/collision.hpp"

namespace hmpc {

namespace {

// Quintic with boundary (d0, dd0, 0) -> (d1, 0, 0) over T.
struct Quintic {
  double c0, c1, c2, c3, c4, c5;
  Quintic(double d0, double dd0, double ddd0, double d1, double T) {
    c0 = d0;
    c1 = dd0;
    c2 = 0.5 * ddd0;
    const double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T;
    const double b0 = d1 - (c0 + c1 * T + c2 * T2);
    const double b1 = -(c1 + 2.0 * c2 * T);
    const double b2 = -2.0 * c2;
    // Solve [T3 T4 T5; 3T2 4T3 5T4; 6T 12T2 20T3] [c3 c4 c5] = [b0 b1 b2].
    Eigen::Matrix3d m;
    m << T3, T4, T5, 3 * T2, 4 * T3, 5 * T4, 6 * T, 12 * T2, 20 * T3;
    const Eigen::Vector3d sol = m.partialPivLu().solve(Eigen::Vector3d(b0, b1, b2));
    c3 = sol[0];
    c4 = sol[1];
    c5 = sol[2];
  }
  double value(double t) const {
    return c0 + t * (c1 + t * (c2 + t * (c3 + t * (c4 + t * c5))));
  }
  double deriv(double t) const {
    return c1 + t * (2 * c2 + t * (3 * c3 + t * (4 * c4 + t * 5 * c5)));
  }
  double accel(double t) const {
    return 2 * c2 + t * (6 * c3 + t * (12 * c4 + t * 20 * c5));
  }
  double jerk(double t) const { return 6 * c3 + t * (24 * c4 + t * 60 * c5); }
};

// Quartic velocity-keeping profile: (s0, v0, a0) with s'(T)=vT, s''(T)=0.
struct Quartic {
  double c0, c1, c2, c3, c4;
  Quartic(double s0, double v0, double a0, double vT, double T) {
    c0 = s0;
    c1 = v0;
    c2 = 0.5 * a0;
    const double T2 = T * T;
    Eigen::Matrix2d m;
    m << 3 * T2, 4 * T2 * T, 6 * T, 12 * T2;
    const Eigen::Vector2d b(vT - v0 - a0 * T, -a0);
    const Eigen::Vector2d sol = m.partialPivLu().solve(b);
    c3 = sol[0];
    c4 = sol[1];
  }
  double value(double t) const {
    return c0 + t * (c1 + t * (c2 + t * (c3 + t * c4)));
  }
  double deriv(double t) const {
    return c1 + t * (2 * c2 + t * (3 * c3 + t * 4 * c4));
  }
  double accel(double t) const { return 2 * c2 + t * (6 * c3 + t * 12 * c4); }
  double jerk(double t) const { return 6 * c3 + t * 24 * c4; }
};

struct Candidate {
  BaselineTrajectory traj;
  double cost = std::numeric_limits<double>::infinity();
  bool feasible = false;
};

}  // namespace

BaselineTrajectory baseline_frenet_plan(const WorldSnapshot& snapshot,
                                        const BaselineConfig& config,
                                        const VehicleParams& params) {
  const RoadModel& road = snapshot.road;
  const int current_lane = road.lane_of(snapshot.ego.y);
  const double v0 = snapshot.ego.vx;
  const double d0 = snapshot.ego.y;
  const double dd0 = snapshot.ego.vx * std::sin(snapshot.ego.theta) + snapshot.ego.vy;

  // Sensing + prediction, matching the proposed pipeline's assumptions.
  std::vector<PredictedObstacle> predictions;
  const std::vector<double> dts(static_cast<std::size_t>(config.n), config.dt);
  double lead_gap = std::numeric_limits<double>::infinity();
  double lead_speed = 0.0;
  for (const ObstacleState& obs : snapshot.obstacles) {
    const double rel = obs.x - snapshot.ego.x;
    if (rel > config.sensing_ahead || rel < -config.sensing_behind) continue;
    predictions.push_back(predict(obs, config.n, dts, config.prediction));
    if (road.lane_of(obs.y) == current_lane && rel > 0.0 && rel < lead_gap) {
      lead_gap = rel;
      lead_speed = obs.v;
    }
  }

  // Behavior trigger for lane-change candidates.
  std::vector<int> target_lanes{current_lane};
  const bool lane_change_wanted = lead_gap < config.lane_change_trigger_gap &&
                                  lead_speed < config.desired_speed - 0.5;
  if (lane_change_wanted) {
    if (current_lane - 1 >= 0) target_lanes.push_back(current_lane - 1);
    if (current_lane + 1 < road.lane_count) target_lanes.push_back(current_lane + 1);
  }

  const double horizon = config.n * config.dt;
  Candidate best;
  for (int lane : target_lanes) {
    const double d_target = road.lane_center(lane);
    for (double T = config.duration_min; T <= config.duration_max + 1e-9;
         T += config.duration_step) {
      const Quintic lateral(d0, dd0, 0.0, d_target, T);
      for (double dv : config.terminal_speed_offsets) {
        double vT = config.desired_speed + dv;
        if (lead_gap < config.lane_change_trigger_gap && lane == current_lane) {
          vT = std::min(vT, lead_speed);  // following candidates match lead
        }
        if (vT < 1.0) continue;
        const Quartic longitudinal(snapshot.ego.x, v0, 0.0, vT, T);

        Candidate cand;
        cand.traj.target_lane = lane;
        bool feasible = true;
        double jerk_cost = 0.0;
        for (int i = 1; i <= config.n; ++i) {
          const double t = i * config.dt;
          const double tc = std::min(t, T);  // hold terminal values past T
          double s, v, a, d, dd, dda;
          if (t <= T) {
            s = longitudinal.value(t);
            v = longitudinal.deriv(t);
            a = longitudinal.accel(t);
            d = lateral.value(t);
            dd = lateral.deriv(t);
            dda = lateral.accel(t);
          } else {
            const double vT_end = longitudinal.deriv(T);
            s = longitudinal.value(T) + vT_end * (t - T);
            v = vT_end;
            a = 0.0;
            d = d_target;
            dd = 0.0;
            dda = 0.0;
          }
          if (v < 0.5 || std::abs(a) > config.a_max + 1e-9) {
            feasible = false;
            break;
          }
          if (d < road.y_min + params.circle_radius ||
              d > road.y_max() - params.circle_radius) {
            feasible = false;
            break;
          }
          const double kappa = std::abs(dda) / std::max(v * v, 1.0);
          if (kappa > config.kappa_max) {
            feasible = false;
            break;
          }
          const double heading = std::atan2(dd, std::max(v, 1e-6));
          cand.traj.times.push_back(t);
          cand.traj.poses.emplace_back(s, d, heading);
          cand.traj.speeds.push_back(std::hypot(v, dd));
          cand.traj.accels.push_back(a);
          jerk_cost += (std::pow(longitudinal.jerk(tc), 2) +
                        std::pow(lateral.jerk(tc), 2)) *
                       config.dt;

          // Time-matched circle collision test against every prediction.
          for (const PredictedObstacle& pred : predictions) {
            const auto dists = pairwise_clearances(
                cand.traj.poses.back(), params.l1, params.l2,
                pred.poses[i - 1], pred.l1, pred.l2);
            const double min_d = *std::min_element(dists.begin(), dists.end());
            if (min_d < 2.0 * params.circle_radius) {
              feasible = false;
              break;
            }
          }
          if (!feasible) break;
        }
        if (!feasible) continue;

        const double vT_end = longitudinal.deriv(T);
        cand.cost = config.w_jerk * jerk_cost + config.w_time * T +
                    config.w_speed * std::pow(vT_end - config.desired_speed, 2);
        // Small bias keeps lane changes purposeful rather than free.
        if (lane != current_lane) cand.cost += 1.0;
        cand.feasible = true;
        cand.traj.cost = cand.cost;
        if (cand.cost < best.cost) best = std::move(cand);
        (void)horizon;
      }
    }
  }

  if (best.feasible) return best.traj;

  // Fallback: brake in lane toward the lead speed (or a crawl).
  BaselineTrajectory fb;
  fb.fallback_braking = true;
  fb.target_lane = current_lane;
  double v = v0;
  double x = snapshot.ego.x;
  const double v_floor = std::isfinite(lead_gap) ? std::min(lead_speed, v0) : 1.0;
  for (int i = 1; i <= config.n; ++i) {
    v = std::max(std::max(v_floor, 1.0), v - config.a_max * config.dt);
    x += v * config.dt;
    fb.times.push_back(i * config.dt);
    fb.poses.emplace_back(x, d0, 0.0);
    fb.speeds.push_back(v);
    fb.accels.push_back(-config.a_max);
  }
  return fb;
}

}  // namespace hmpc
