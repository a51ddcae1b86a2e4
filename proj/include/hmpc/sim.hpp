#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hmpc/baseline.hpp"
#include "hmpc/planner.hpp"

namespace hmpc {

/// Deterministic splitmix64-based generator; identical seeds give identical
/// scenarios on any platform.
struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
  }
};

struct TrafficLaneConfig {
  int count = 20;
  double spacing_min = 50.0;   // m
  double spacing_max = 150.0;  // m
  double speed_min_kmh = 70.0;
  double speed_max_kmh = 100.0;
};

struct TrafficConfig {
  TrafficLaneConfig left{20, 50.0, 150.0, 70.0, 100.0};
  TrafficLaneConfig right{20, 50.0, 150.0, 90.0, 120.0};
  bool swap_lane_speeds = false;  // exchange the left/right speed ranges
};

struct Scenario {
  RoadModel road;
  double road_length = 3000.0;
  VehicleState ego;
  std::vector<ObstacleState> obstacles;
  std::uint64_t seed = 0;
  TrafficConfig traffic;
  bool spawn_traffic = false;  // generate dense traffic on top of `obstacles`
  double duration = 200.0;     // s
  std::string comment;
};

/// Populates both lanes with randomly spaced constant-speed vehicles from the
/// scenario's traffic config. Throws when the requested packing cannot fit.
Scenario spawn_dense_traffic(std::uint64_t seed, const Scenario& base);

struct ObstacleRuntime {
  ObstacleState state;
  double cruise_v = 0.0;
  bool following = false;
};

struct WorldState {
  double time = 0.0;
  VehicleState ego;
  std::vector<ObstacleRuntime> obstacles;
};

struct SimConfig {
  double dt = 0.5;
  double follow_engage_gap = 50.0;   // m
  double follow_release_gap = 55.0;  // m
  double follow_gain = 0.5;          // 1/s on the gap error
  double plant_stiffness_scale = 1.0;  // model-mismatch knob for experiments
};

/// Advances obstacles one step: constant cruise speed, switching to
/// proportional gap regulation toward the engage gap behind a same-lane
/// leader (the ego counts as a leader). Speeds update synchronously from the
/// pre-step positions.
void step_obstacles(WorldState* world, const RoadModel& road,
                    const SimConfig& config, double dt);

/// Full step for the proposed planner's plant: obstacles as above, ego by a
/// single RK4 step under the given input.
void step_world(WorldState* world, const ControlInput& ego_input,
                const RoadModel& road, const VehicleParams& params,
                const SimConfig& config, double dt);

enum class PlannerKind { proposed, baseline };
const char* to_string(PlannerKind kind);

struct SimStepRecord {
  double time = 0.0;
  VehicleState ego;
  std::vector<ObstacleState> obstacles;
  int cycle_target_lane = 0;
  bool cycle_fallback = false;
};

struct SimLog {
  PlannerKind kind = PlannerKind::proposed;
  RoadModel road;
  double road_length = 0.0;
  std::vector<SimStepRecord> steps;
  std::vector<PlanCycleRecord> cycles;  // proposed planner only
  double completion_time = 0.0;
  bool reached_end = false;
  bool truncated_on_failure = false;
};

struct RunMetrics {
  double completion_time = 0.0;
  double mean_speed = 0.0;
  double max_speed = 0.0;
  int lane_changes = 0;
  double min_clearance = 0.0;  // min time-matched disc distance over the run
  int behavior_switches = 0;
  double solve_ms_median = 0.0;
  double solve_ms_p95 = 0.0;
};

/// Lockstep closed loop: plan every dt, apply the first input (proposed) or
/// follow the sampled trajectory (baseline), then advance the world.
SimLog run_closed_loop(const Scenario& scenario, PlannerKind kind,
                       const PlannerConfig& planner_config,
                       const BaselineConfig& baseline_config,
                       const VehicleParams& params, const SimConfig& sim_config);

/// Metrics extracted from a log: completion time, speeds, lane changes with
/// 0.5 m commitment hysteresis, minimum time-matched clearance, behavior
/// switches among {follow, left, right} and solve-time statistics.
RunMetrics metrics(const SimLog& log);

}  // namespace hmpc
