#include "hmpc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hmpc/collision.hpp"

namespace hmpc {

const char* to_string(PlannerKind kind) {
  return kind == PlannerKind::proposed ? "proposed" : "baseline";
}

Scenario spawn_dense_traffic(std::uint64_t seed, const Scenario& base) {
  Scenario scenario = base;
  scenario.seed = seed;
  scenario.spawn_traffic = false;  // resolved here
  Rng rng(seed);

  TrafficLaneConfig left = base.traffic.left;
  TrafficLaneConfig right = base.traffic.right;
  if (base.traffic.swap_lane_speeds) {
    std::swap(left.speed_min_kmh, right.speed_min_kmh);
    std::swap(left.speed_max_kmh, right.speed_max_kmh);
  }

  if (base.road.lane_count < 2) {
    throw DomainError("spawn_dense_traffic: needs at least two lanes");
  }
  const int right_lane = 0;
  const int left_lane = base.road.lane_count - 1;

  int next_id = static_cast<int>(scenario.obstacles.size()) + 1;
  const auto spawn_lane = [&](const TrafficLaneConfig& cfg, int lane) {
    if (cfg.count * cfg.spacing_min > scenario.road_length) {
      throw DomainError("spawn_dense_traffic: lane cannot fit requested count");
    }
    double x = 0.0;
    for (int k = 0; k < cfg.count; ++k) {
      x += rng.uniform(cfg.spacing_min, cfg.spacing_max);
      if (x > scenario.road_length) {
        throw DomainError("spawn_dense_traffic: spacing exceeded road length");
      }
      ObstacleState obs;
      obs.id = next_id++;
      obs.x = x;
      obs.y = base.road.lane_center(lane);
      obs.v = rng.uniform(cfg.speed_min_kmh, cfg.speed_max_kmh) / 3.6;
      obs.heading = 0.0;
      scenario.obstacles.push_back(obs);
    }
  };
  // Left lane first so identical seeds reproduce the same layout.
  spawn_lane(left, left_lane);
  spawn_lane(right, right_lane);
  return scenario;
}

void step_obstacles(WorldState* world, const RoadModel& road,
                    const SimConfig& config, double dt) {
  const int count = static_cast<int>(world->obstacles.size());
  std::vector<double> new_speeds(count);
  const int ego_lane = road.lane_of(world->ego.y);

  for (int i = 0; i < count; ++i) {
    ObstacleRuntime& obs = world->obstacles[i];
    const int lane = road.lane_of(obs.state.y);
    // Nearest same-lane leader, ego included.
    double gap = std::numeric_limits<double>::infinity();
    double leader_v = 0.0;
    for (int j = 0; j < count; ++j) {
      if (j == i) continue;
      const ObstacleRuntime& other = world->obstacles[j];
      if (road.lane_of(other.state.y) != lane) continue;
      const double g = other.state.x - obs.state.x;
      if (g > 0.0 && g < gap) {
        gap = g;
        leader_v = other.state.v;
      }
    }
    if (lane == ego_lane) {
      const double g = world->ego.x - obs.state.x;
      if (g > 0.0 && g < gap) {
        gap = g;
        leader_v = world->ego.vx;
      }
    }

    if (obs.following) {
      if (gap >= config.follow_release_gap) obs.following = false;
    } else if (gap < config.follow_engage_gap) {
      obs.following = true;
    }
    if (obs.following && std::isfinite(gap)) {
      const double regulated =
          leader_v + config.follow_gain * (gap - config.follow_engage_gap);
      new_speeds[i] = std::clamp(regulated, 0.0, obs.cruise_v);
    } else {
      new_speeds[i] = obs.cruise_v;
    }
  }
  for (int i = 0; i < count; ++i) {
    world->obstacles[i].state.v = new_speeds[i];
    world->obstacles[i].state.x += new_speeds[i] * dt;
  }
}

void step_world(WorldState* world, const ControlInput& ego_input,
                const RoadModel& road, const VehicleParams& params,
                const SimConfig& config, double dt) {
  step_obstacles(world, road, config, dt);
  VehicleParams plant = params;
  plant.c_alpha_f *= config.plant_stiffness_scale;
  plant.c_alpha_r *= config.plant_stiffness_scale;
  world->ego = step_rk4(world->ego, ego_input, plant, dt);
  world->time += dt;
}

SimLog run_closed_loop(const Scenario& scenario, PlannerKind kind,
                       const PlannerConfig& planner_config,
                       const BaselineConfig& baseline_config,
                       const VehicleParams& params,
                       const SimConfig& sim_config) {
  Scenario resolved = scenario;
  if (scenario.spawn_traffic) {
    resolved = spawn_dense_traffic(scenario.seed, scenario);
  }

  WorldState world;
  world.time = 0.0;
  world.ego = resolved.ego;
  world.obstacles.reserve(resolved.obstacles.size());
  for (const ObstacleState& obs : resolved.obstacles) {
    world.obstacles.push_back({obs, obs.v, false});
  }

  SimLog log;
  log.kind = kind;
  log.road = resolved.road;
  log.road_length = resolved.road_length;

  PlanCycleRecord prev;
  bool has_prev = false;
  const double dt = sim_config.dt;

  const auto snapshot_of = [&]() {
    WorldSnapshot snap;
    snap.time = world.time;
    snap.ego = world.ego;
    snap.road = resolved.road;
    snap.obstacles.reserve(world.obstacles.size());
    for (const ObstacleRuntime& o : world.obstacles) {
      snap.obstacles.push_back(o.state);
    }
    return snap;
  };

  const auto log_step = [&](int target_lane, bool fallback) {
    SimStepRecord rec;
    rec.time = world.time;
    rec.ego = world.ego;
    for (const ObstacleRuntime& o : world.obstacles) {
      rec.obstacles.push_back(o.state);
    }
    rec.cycle_target_lane = target_lane;
    rec.cycle_fallback = fallback;
    log.steps.push_back(std::move(rec));
  };

  log_step(resolved.road.lane_of(world.ego.y), false);

  while (world.time < resolved.duration && world.ego.x < resolved.road_length) {
    const WorldSnapshot snap = snapshot_of();
    if (kind == PlannerKind::proposed) {
      PlanCycleRecord rec;
      try {
        rec = plan(snap, has_prev ? &prev : nullptr, planner_config, params);
      } catch (const DomainError&) {
        log.truncated_on_failure = true;
        break;
      }
      const ControlInput u = rec.solution.inputs.empty()
                                 ? ControlInput{0.0, 0.0}
                                 : rec.solution.inputs.front();
      log.cycles.push_back(rec);
      prev = std::move(rec);
      has_prev = true;
      step_world(&world, u, resolved.road, params, sim_config, dt);
      log_step(log.cycles.back().target_lane, log.cycles.back().fallback);
    } else {
      const BaselineTrajectory traj =
          baseline_frenet_plan(snap, baseline_config, params);
      step_obstacles(&world, resolved.road, sim_config, dt);
      // The baseline is kinematic: the plant follows the sampled trajectory.
      if (!traj.poses.empty()) {
        const Eigen::Vector3d& pose = traj.poses.front();
        VehicleState next;
        next.x = pose[0];
        next.y = pose[1];
        next.theta = pose[2];
        next.vx = traj.speeds.front() * std::cos(pose[2] - world.ego.theta);
        next.vy = 0.0;
        next.r = (pose[2] - world.ego.theta) / dt;
        next.delta = 0.0;
        next.vx = std::max(next.vx, 0.5);
        world.ego = next;
      }
      world.time += dt;
      log_step(traj.target_lane, traj.fallback_braking);
    }
  }

  log.reached_end = world.ego.x >= resolved.road_length;
  if (log.reached_end && log.steps.size() >= 2) {
    // Interpolate the crossing instant inside the final step.
    const SimStepRecord& a = log.steps[log.steps.size() - 2];
    const SimStepRecord& b = log.steps.back();
    const double span = b.ego.x - a.ego.x;
    const double w =
        span > 1e-9 ? (resolved.road_length - a.ego.x) / span : 1.0;
    log.completion_time = a.time + std::clamp(w, 0.0, 1.0) * (b.time - a.time);
  } else {
    log.completion_time = world.time;
  }
  return log;
}

namespace {

double min_clearance_to(const VehicleState& ego,
                        const std::vector<ObstacleState>& obstacles,
                        const VehicleParams& params) {
  double best = std::numeric_limits<double>::infinity();
  const Eigen::Vector3d ego_pose(ego.x, ego.y, ego.theta);
  for (const ObstacleState& obs : obstacles) {
    const Eigen::Vector3d obs_pose(obs.x, obs.y, obs.heading);
    const auto d = pairwise_clearances(ego_pose, params.l1, params.l2,
                                       obs_pose, obs.l1, obs.l2);
    best = std::min(best, *std::min_element(d.begin(), d.end()));
  }
  return best;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double idx = q * (values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(idx);
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (idx - lo) * (values[hi] - values[lo]);
}

}  // namespace

RunMetrics metrics(const SimLog& log) {
  if (log.steps.empty()) {
    throw DomainError("metrics: empty log");
  }
  RunMetrics m;
  m.completion_time = log.completion_time;

  VehicleParams params;  // disc geometry for clearance extraction
  double speed_sum = 0.0;
  m.min_clearance = std::numeric_limits<double>::infinity();
  for (const SimStepRecord& step : log.steps) {
    speed_sum += step.ego.vx;
    m.max_speed = std::max(m.max_speed, step.ego.vx);
    if (!step.obstacles.empty()) {
      m.min_clearance = std::min(
          m.min_clearance, min_clearance_to(step.ego, step.obstacles, params));
    }
  }
  if (!std::isfinite(m.min_clearance)) m.min_clearance = 0.0;
  m.mean_speed = speed_sum / static_cast<double>(log.steps.size());

  // Lane changes with 0.5 m commitment hysteresis past the boundary.
  const RoadModel& road = log.road;
  int committed = road.lane_of(log.steps.front().ego.y);
  for (const SimStepRecord& step : log.steps) {
    const int lane = road.lane_of(step.ego.y);
    if (lane != committed) {
      const double into =
          lane > committed
              ? step.ego.y - (road.y_min + lane * road.lane_width)
              : (road.y_min + (lane + 1) * road.lane_width) - step.ego.y;
      if (into >= 0.5) {
        committed = lane;
        ++m.lane_changes;
      }
    }
  }

  // Behavior labels per step: follow / left / right from the active cycle's
  // target lane vs the lane the ego occupies.
  int prev_label = 0;  // 0 follow, +1 left, -1 right
  bool first = true;
  for (const SimStepRecord& step : log.steps) {
    const int lane = road.lane_of(step.ego.y);
    int label = 0;
    if (step.cycle_target_lane > lane) label = 1;
    if (step.cycle_target_lane < lane) label = -1;
    if (!first && label != prev_label) ++m.behavior_switches;
    prev_label = label;
    first = false;
  }

  std::vector<double> solve_ms;
  solve_ms.reserve(log.cycles.size());
  for (const PlanCycleRecord& rec : log.cycles) {
    solve_ms.push_back(rec.solution.wall_time_s * 1e3);
  }
  m.solve_ms_median = percentile(solve_ms, 0.5);
  m.solve_ms_p95 = percentile(solve_ms, 0.95);
  return m;
}

}  // namespace hmpc
