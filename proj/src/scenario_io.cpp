#include "hmpc/scenario_io.hpp"

#include <fstream>

namespace hmpc {

using nlohmann::json;

Scenario scenario_from_json(const json& j) {
  Scenario s;
  if (j.contains("road")) {
    const json& r = j.at("road");
    s.road_length = r.value("length_m", s.road_length);
    s.road.lane_count = r.value("lanes", s.road.lane_count);
    s.road.lane_width = r.value("lane_width_m", s.road.lane_width);
    s.road.y_min = r.value("y_min_m", 0.0);
  }
  if (j.contains("ego")) {
    const json& e = j.at("ego");
    s.ego.x = e.value("x", 0.0);
    s.ego.y = e.value("y", s.road.lane_center(0));
    s.ego.theta = e.value("theta", 0.0);
    s.ego.delta = e.value("delta", 0.0);
    s.ego.vx = e.value("vx", 25.0);
    s.ego.vy = e.value("vy", 0.0);
    s.ego.r = e.value("r", 0.0);
  }
  if (j.contains("obstacles")) {
    int id = 1;
    for (const json& o : j.at("obstacles")) {
      ObstacleState obs;
      obs.id = o.value("id", id);
      obs.x = o.at("x").get<double>();
      obs.y = o.at("y").get<double>();
      obs.v = o.at("v").get<double>();
      obs.heading = o.value("heading", 0.0);
      s.obstacles.push_back(obs);
      ++id;
    }
  }
  if (j.contains("traffic")) {
    const json& t = j.at("traffic");
    s.spawn_traffic = true;
    const int count = t.value("per_lane_count", 20);
    s.traffic.left.count = count;
    s.traffic.right.count = count;
    s.traffic.left.spacing_min = t.value("spacing_min_m", 50.0);
    s.traffic.left.spacing_max = t.value("spacing_max_m", 150.0);
    s.traffic.right.spacing_min = s.traffic.left.spacing_min;
    s.traffic.right.spacing_max = s.traffic.left.spacing_max;
    if (t.contains("left_speed_kmh")) {
      s.traffic.left.speed_min_kmh = t.at("left_speed_kmh").at(0).get<double>();
      s.traffic.left.speed_max_kmh = t.at("left_speed_kmh").at(1).get<double>();
    }
    if (t.contains("right_speed_kmh")) {
      s.traffic.right.speed_min_kmh =
          t.at("right_speed_kmh").at(0).get<double>();
      s.traffic.right.speed_max_kmh =
          t.at("right_speed_kmh").at(1).get<double>();
    }
    s.traffic.swap_lane_speeds = t.value("swap_lane_speeds", false);
  }
  s.seed = j.value("seed", 0ull);
  s.duration = j.value("duration_s", 200.0);
  s.comment = j.value("comment", std::string{});
  return s;
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["road"] = {{"length_m", s.road_length},
               {"lanes", s.road.lane_count},
               {"lane_width_m", s.road.lane_width},
               {"y_min_m", s.road.y_min}};
  j["ego"] = {{"x", s.ego.x},     {"y", s.ego.y},   {"theta", s.ego.theta},
              {"delta", s.ego.delta}, {"vx", s.ego.vx}, {"vy", s.ego.vy},
              {"r", s.ego.r}};
  j["obstacles"] = json::array();
  for (const ObstacleState& o : s.obstacles) {
    j["obstacles"].push_back(
        {{"id", o.id}, {"x", o.x}, {"y", o.y}, {"v", o.v}, {"heading", o.heading}});
  }
  if (s.spawn_traffic) {
    j["traffic"] = {
        {"per_lane_count", s.traffic.left.count},
        {"spacing_min_m", s.traffic.left.spacing_min},
        {"spacing_max_m", s.traffic.left.spacing_max},
        {"left_speed_kmh",
         {s.traffic.left.speed_min_kmh, s.traffic.left.speed_max_kmh}},
        {"right_speed_kmh",
         {s.traffic.right.speed_min_kmh, s.traffic.right.speed_max_kmh}},
        {"swap_lane_speeds", s.traffic.swap_lane_speeds}};
  }
  j["seed"] = s.seed;
  j["duration_s"] = s.duration;
  if (!s.comment.empty()) j["comment"] = s.comment;
  return j;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DomainError("cannot open scenario file: " + path.string());
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DomainError("malformed scenario file " + path.string() + ": " +
                      e.what());
  }
  try {
    return scenario_from_json(j);
  } catch (const json::exception& e) {
    throw DomainError("invalid scenario " + path.string() + ": " + e.what());
  }
}

void save_scenario(const Scenario& scenario,
                   const std::filesystem::path& path) {
  std::ofstream out(path);
  out << scenario_to_json(scenario).dump(2) << '\n';
}

void apply_config(const json& j, VehicleParams* params, PlannerConfig* planner,
                  BaselineConfig* baseline, SimConfig* sim) {
  if (j.contains("params") && params != nullptr) {
    const json& p = j.at("params");
    params->c_alpha_f = p.value("c_alpha_f", params->c_alpha_f);
    params->c_alpha_r = p.value("c_alpha_r", params->c_alpha_r);
    params->l1 = p.value("l1", params->l1);
    params->l2 = p.value("l2", params->l2);
    params->mass = p.value("m", params->mass);
    params->yaw_inertia = p.value("iz", params->yaw_inertia);
    params->cg_height = p.value("h_g", params->cg_height);
    params->track_width = p.value("track_width", params->track_width);
    params->rollover_eta = p.value("eta", params->rollover_eta);
    params->circle_radius = p.value("radius", params->circle_radius);
    params->vx_floor = p.value("vx_floor", params->vx_floor);
    params->validate();
  }
  if (planner == nullptr) return;
  if (j.contains("weights")) {
    const json& w = j.at("weights");
    planner->weights.accel = w.value("w1", planner->weights.accel);
    planner->weights.steer_rate = w.value("w2", planner->weights.steer_rate);
    planner->weights.speed = w.value("w3", planner->weights.speed);
  }
  if (j.contains("limits")) {
    const json& l = j.at("limits");
    planner->limits.v_max = l.value("v_max", planner->limits.v_max);
    planner->limits.a_max = l.value("a_max", planner->limits.a_max);
    planner->limits.gamma_max = l.value("gamma_max", planner->limits.gamma_max);
    planner->limits.delta_max = l.value("delta_max", planner->limits.delta_max);
    planner->limits.theta_max = l.value("theta_max", planner->limits.theta_max);
    planner->limits.alpha_f_max =
        l.value("alpha_f_max", planner->limits.alpha_f_max);
    planner->limits.alpha_r_max =
        l.value("alpha_r_max", planner->limits.alpha_r_max);
    if (baseline != nullptr) {
      baseline->a_max = planner->limits.a_max;
      baseline->desired_speed = planner->limits.v_max;
    }
  }
  if (j.contains("planner")) {
    const json& p = j.at("planner");
    planner->n = p.value("n", planner->n);
    planner->dt = p.value("dt", planner->dt);
    planner->sensing_ahead = p.value("sensing_ahead", planner->sensing_ahead);
    planner->sensing_behind = p.value("sensing_behind", planner->sensing_behind);
    planner->collision.inflation_k =
        p.value("inflation_k", planner->collision.inflation_k);
    planner->collision.cross_pairing =
        p.value("cross_pairing", planner->collision.cross_pairing);
    if (p.contains("corridor_mode")) {
      planner->corridor_mode = p.at("corridor_mode").get<std::string>() == "union"
                                   ? CorridorMode::lane_union
                                   : CorridorMode::per_lane_best;
    }
    planner->solver.soft_collisions =
        p.value("soft_collisions", planner->solver.soft_collisions);
  }
  if (j.contains("sim") && sim != nullptr) {
    const json& s = j.at("sim");
    sim->dt = s.value("dt", sim->dt);
    sim->plant_stiffness_scale =
        s.value("plant_stiffness_scale", sim->plant_stiffness_scale);
  }
  if (j.contains("baseline") && baseline != nullptr) {
    const json& b = j.at("baseline");
    baseline->desired_speed = b.value("desired_speed", baseline->desired_speed);
    baseline->lane_change_trigger_gap =
        b.value("trigger_gap", baseline->lane_change_trigger_gap);
  }
}

json solution_stats_json(const TrajectorySolution& solution) {
  return json{{"status", to_string(solution.status)},
              {"iterations", solution.iterations},
              {"wall_time_ms", solution.wall_time_s * 1e3},
              {"cost", solution.objective},
              {"max_violation", solution.max_violation}};
}

json cycle_record_json(const PlanCycleRecord& record) {
  json j = solution_stats_json(record.solution);
  j["time"] = record.time;
  j["constraint_count"] = record.constraint_count;
  j["target_lane"] = record.target_lane;
  j["current_lane"] = record.current_lane;
  j["fallback"] = record.fallback;
  j["obstacles_in_range"] = record.obstacles_in_range;
  j["timings_ms"] = {{"predict", record.timings.predict_s * 1e3},
                     {"heuristic", record.timings.heuristic_s * 1e3},
                     {"build", record.timings.build_s * 1e3},
                     {"solve", record.timings.solve_s * 1e3},
                     {"total", record.timings.total_s * 1e3}};
  return j;
}

json metrics_json(const RunMetrics& m) {
  return json{{"completion_time_s", m.completion_time},
              {"mean_speed", m.mean_speed},
              {"max_speed", m.max_speed},
              {"lane_changes", m.lane_changes},
              {"min_clearance", m.min_clearance},
              {"behavior_switches", m.behavior_switches},
              {"solve_ms_median", m.solve_ms_median},
              {"solve_ms_p95", m.solve_ms_p95}};
}

}  // namespace hmpc
