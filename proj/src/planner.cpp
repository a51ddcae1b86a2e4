#include "hmpc/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace hmpc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct CorridorChoice {
  int target_lane = 0;
  XTProfile profile;
  double cost = 0.0;
};

// Candidate lanes in deterministic order: current first, then lower, then
// higher index. The current lane wins ties.
std::vector<int> candidate_lanes(const RoadModel& road, int current) {
  std::vector<int> lanes{current};
  if (current - 1 >= 0) lanes.push_back(current - 1);
  if (current + 1 < road.lane_count) lanes.push_back(current + 1);
  return lanes;
}

bool rear_gap_safe(const WorldSnapshot& snapshot, int lane,
                   const PlannerConfig& config) {
  const RoadModel& road = snapshot.road;
  double nearest_gap = std::numeric_limits<double>::infinity();
  double rear_speed = 0.0;
  for (const ObstacleState& obs : snapshot.obstacles) {
    if (road.lane_of(obs.y) != lane) continue;
    if (obs.x >= snapshot.ego.x) continue;
    const double gap = snapshot.ego.x - obs.x;
    if (gap < nearest_gap) {
      nearest_gap = gap;
      rear_speed = obs.v;
    }
  }
  if (!std::isfinite(nearest_gap)) return true;
  const double closing = std::max(0.0, rear_speed - snapshot.ego.vx);
  return nearest_gap >= config.rear_gap_base +
                            config.rear_gap_per_closing * closing;
}

CorridorChoice pick_corridor(const WorldSnapshot& snapshot,
                             std::span<const PredictedObstacle> predictions,
                             const PlannerConfig& config) {
  const RoadModel& road = snapshot.road;
  const int current = road.lane_of(snapshot.ego.y);

  XTConfig xt = config.xt;
  xt.t_extent = config.n * config.dt;
  xt.x_extent = config.sensing_ahead;
  const XTLimits limits{config.limits.v_max, config.limits.a_max};

  if (config.corridor_mode == CorridorMode::lane_union) {
    LateralInterval corridor = road.lane_interval(current);
    for (int lane : candidate_lanes(road, current)) {
      const LateralInterval li = road.lane_interval(lane);
      corridor.lo = std::min(corridor.lo, li.lo);
      corridor.hi = std::max(corridor.hi, li.hi);
    }
    const XTGrid grid = build_xt_grid(snapshot.ego, predictions, corridor, xt);
    CorridorChoice choice;
    choice.target_lane = current;
    choice.profile = search_xt(grid, snapshot.ego.x, snapshot.ego.vx, limits);
    choice.cost = choice.profile.cost;
    return choice;
  }

  CorridorChoice best;
  bool first = true;
  for (int lane : candidate_lanes(road, current)) {
    if (lane != current && !rear_gap_safe(snapshot, lane, config)) continue;
    const XTGrid grid = build_xt_grid(snapshot.ego, predictions,
                                      road.lane_interval(lane), xt);
    XTProfile profile =
        search_xt(grid, snapshot.ego.x, snapshot.ego.vx, limits);
    double cost = profile.cost;
    if (profile.follow_fallback) cost += 1e6;
    if (first || cost < best.cost - 1e-9) {
      best.target_lane = lane;
      best.profile = std::move(profile);
      best.cost = cost;
      first = false;
    }
  }
  return best;
}

// Cold-start guess: track v_pre longitudinally and ramp laterally to the
// target lane center. The solver treats this as any other warm start.
InitialGuess seeded_guess(const WorldSnapshot& snapshot,
                          const PlanningProblem& problem, int target_lane,
                          const PlannerConfig& config) {
  InitialGuess guess;
  guess.states.resize(problem.n);
  guess.inputs.resize(problem.n - 1);

  const double y0 = snapshot.ego.y;
  const double y1 = snapshot.road.lane_center(target_lane);
  const double ramp_t = std::max(1.0, config.lane_change_seed_duration);

  double t = 0.0;
  double x = snapshot.ego.x;
  double v_prev = snapshot.ego.vx;
  for (int i = 0; i < problem.n; ++i) {
    t += problem.dt[i];
    const double v = std::clamp(problem.v_pre[i], problem.vx_lower,
                                problem.limits.v_max);
    x += 0.5 * (v_prev + v) * problem.dt[i];
    const double w = std::clamp(t / ramp_t, 0.0, 1.0);
    const double blend = 0.5 * (1.0 - std::cos(w * M_PI));
    VehicleState s;
    s.x = x;
    s.y = y0 + blend * (y1 - y0);
    s.theta = 0.0;
    s.delta = 0.0;
    s.vx = v;
    s.vy = 0.0;
    s.r = 0.0;
    guess.states[i] = s;
    if (i < problem.n - 1) {
      const double dv = (i + 1 < problem.n ? problem.v_pre[i + 1] : v) - v;
      guess.inputs[i] = {
          0.0, std::clamp(dv / problem.dt[i], -problem.limits.a_max,
                          problem.limits.a_max)};
    }
    v_prev = v;
  }
  return guess;
}

// In-lane braking used when the solver reports infeasibility: steer the
// front wheels back to center and decelerate until just above the model
// floor.
void fill_fallback_trajectory(const WorldSnapshot& snapshot,
                              const PlanningProblem& problem,
                              const PlannerConfig& config,
                              TrajectorySolution* solution) {
  solution->states.clear();
  solution->inputs.clear();
  VehicleState s = snapshot.ego;
  for (int i = 0; i < problem.n; ++i) {
    const double dt = problem.dt[i];
    ControlInput u;
    u.gamma = std::clamp(-s.delta / dt, -0.5 * config.limits.gamma_max,
                         0.5 * config.limits.gamma_max);
    const double v_target = problem.vx_lower;
    u.accel = s.vx > v_target ? std::max(-config.limits.a_max,
                                         (v_target - s.vx) / dt)
                              : 0.0;
    if (i < problem.n - 1) solution->inputs.push_back(u);
    VehicleState next;
    if (!try_step_rk4(s, u, problem.params, dt, &next)) {
      next = s;  // hold on a failed stage; still a defined trajectory
      next.x += s.vx * dt;
    }
    s = next;
    solution->states.push_back(s);
  }
}

}  // namespace

std::vector<ObstacleState> sensing_filter(const WorldSnapshot& snapshot,
                                          const PlannerConfig& config) {
  std::vector<ObstacleState> in_range;
  for (const ObstacleState& obs : snapshot.obstacles) {
    const double rel = obs.x - snapshot.ego.x;
    if (rel <= config.sensing_ahead && rel >= -config.sensing_behind) {
      in_range.push_back(obs);
    }
  }
  return in_range;
}

PlanCycleRecord plan(const WorldSnapshot& snapshot,
                     const PlanCycleRecord* prev, const PlannerConfig& config,
                     const VehicleParams& params) {
  if (!(snapshot.ego.vx >= params.vx_floor)) {
    throw DomainError("plan: ego speed below the tire-model floor");
  }
  if (snapshot.ego.y < snapshot.road.y_min ||
      snapshot.ego.y > snapshot.road.y_max()) {
    throw DomainError("plan: ego outside road bounds");
  }

  const auto t_total = Clock::now();
  PlanCycleRecord record;
  record.time = snapshot.time;
  record.current_lane = snapshot.road.lane_of(snapshot.ego.y);

  // Sensing + prediction.
  auto t0 = Clock::now();
  const std::vector<ObstacleState> in_range = sensing_filter(snapshot, config);
  record.obstacles_in_range = static_cast<int>(in_range.size());
  const std::vector<double> dts = config.dt_schedule();
  std::vector<PredictedObstacle> predictions;
  predictions.reserve(in_range.size());
  for (const ObstacleState& obs : in_range) {
    predictions.push_back(predict(obs, config.n, dts, config.prediction));
  }
  record.timings.predict_s = seconds_since(t0);

  // Heuristic speed profile.
  t0 = Clock::now();
  const CorridorChoice corridor = pick_corridor(snapshot, predictions, config);
  record.target_lane = corridor.target_lane;
  record.v_pre = profile_to_vpre(corridor.profile, dts);
  record.timings.heuristic_s = seconds_since(t0);

  // Problem assembly.
  t0 = Clock::now();
  ProblemConfig pc;
  pc.weights = config.weights;
  pc.limits = config.limits;
  pc.road_y_min = snapshot.road.y_min;
  pc.road_y_max = snapshot.road.y_max();
  pc.collision = config.collision;
  const PlanningProblem problem = build_problem(
      snapshot.ego, record.v_pre, dts, predictions, params, pc);
  record.constraint_count = static_cast<int>(problem.collisions.rows.size());
  record.timings.build_s = seconds_since(t0);

  // Warm start: shift the previous solution when it targets the same lane,
  // otherwise re-seed toward the chosen corridor.
  t0 = Clock::now();
  std::optional<InitialGuess> warm;
  if (prev != nullptr && prev->solution.status != SolveStatus::infeasible &&
      !prev->solution.states.empty()) {
    const double prev_terminal_y = prev->solution.states.back().y;
    if (snapshot.road.lane_of(prev_terminal_y) == corridor.target_lane) {
      warm = shift_warm_start(prev->solution, dts);
    }
  }
  if (!warm.has_value()) {
    warm = seeded_guess(snapshot, problem, corridor.target_lane, config);
  }

  record.solution = solve(problem, warm, config.solver);
  if (record.solution.status == SolveStatus::infeasible) {
    record.fallback = true;
    fill_fallback_trajectory(snapshot, problem, config, &record.solution);
  }
  record.timings.solve_s = seconds_since(t0);
  record.timings.total_s = seconds_since(t_total);
  return record;
}

}  // namespace hmpc
