#pragma once

#include <filesystem>
#include <string>

#include "hmpc/baseline.hpp"
#include "hmpc/sim.hpp"

#include <json.hpp>

namespace hmpc {

/// Scenario JSON schema (all SI units):
///   {"road": {"length_m", "lanes", "lane_width_m"},
///    "ego": {"x","y","theta","delta","vx","vy","r"},
///    "obstacles": [{"x","y","v","heading"}],
///    "traffic": {"per_lane_count","spacing_min_m","spacing_max_m",
///                "left_speed_kmh":[lo,hi],"right_speed_kmh":[lo,hi],
///                "swap_lane_speeds"},
///    "seed", "duration_s", "comment"}
Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& scenario);

/// Applies "params" / "weights" / "limits" / "planner" overrides from a
/// config JSON object onto the defaults.
void apply_config(const nlohmann::json& j, VehicleParams* params,
                  PlannerConfig* planner, BaselineConfig* baseline,
                  SimConfig* sim);

nlohmann::json solution_stats_json(const TrajectorySolution& solution);
nlohmann::json cycle_record_json(const PlanCycleRecord& record);
nlohmann::json metrics_json(const RunMetrics& metrics);

}  // namespace hmpc
