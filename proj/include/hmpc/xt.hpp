#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "hmpc/dynamics.hpp"
#include "hmpc/prediction.hpp"

namespace hmpc {

/// Lateral interval [lo, hi] in road coordinates.
struct LateralInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double y) const { return y >= lo && y <= hi; }
};

struct XTConfig {
  double x_res = 2.0;        // m per cell
  double t_res = 0.5;        // s per slice
  double x_extent = 300.0;   // m ahead of the ego (sensing range)
  double t_extent = 10.0;    // s, must cover the planning horizon
  double margin = 5.0;       // m added around an obstacle's body interval
  double soft_range = 10.0;  // m over which the proximity cost decays to 0
  double w_time = 1.0;
  double w_terminal = 1.0;
  double w_prox = 0.1;
  double v_bucket = 1.0;     // m/s per speed bucket in the search dedup
  bool include_rear_obstacles = false;
};

/// One obstacle's blocked longitudinal interval at a time slice.
struct XTBand {
  double lo = 0.0;
  double hi = 0.0;
  double velocity = 0.0;  // longitudinal speed of the band (m/s)
};

/// Occupancy of the longitudinal-position / time plane ahead of the ego.
struct XTGrid {
  XTConfig config;
  double x_origin = 0.0;  // ego longitudinal position at slice 0
  int slices = 0;
  int cells = 0;
  std::vector<std::vector<XTBand>> bands;  // per slice
  std::vector<std::uint8_t> occupied;      // slices * cells
  std::vector<float> soft_cost;            // slices * cells

  int cell_of(double x) const {
    return static_cast<int>((x - x_origin) / config.x_res);
  }
  double slice_time(int k) const { return k * config.t_res; }
  bool in_grid(double x) const {
    return x >= x_origin && x < x_origin + config.x_extent;
  }
  bool is_occupied(int slice, double x) const;
  double soft_at(int slice, double x) const;
};

struct XTProfileNode {
  double t = 0.0;
  double x = 0.0;
  double v = 0.0;
};

/// Speed profile in the X-T plane. `follow_fallback` marks the degenerate
/// decelerate-behind-the-leader profile returned when no free profile exists.
struct XTProfile {
  std::vector<XTProfileNode> nodes;
  bool follow_fallback = false;
  double cost = 0.0;
};

/// Projects predicted obstacles whose lateral position lies inside the
/// corridor onto the X-T plane. Each obstacle blocks
/// [x - l2 - margin, x + l1 + margin] at every slice it is in the corridor.
XTGrid build_xt_grid(const VehicleState& ego,
                     std::span<const PredictedObstacle> predictions,
                     const LateralInterval& corridor, const XTConfig& config);

struct XTLimits {
  double v_max = 33.3;
  double a_max = 2.0;
};

/// A* search over (time slice, x cell, speed bucket) with constant
/// acceleration primitives {-a, -a/2, 0, a/2, a} per slice. Cost is elapsed
/// slices plus terminal-speed shortfall plus the soft proximity cost; ties
/// break toward lower acceleration magnitude, then earlier expansion.
XTProfile search_xt(const XTGrid& grid, double start_x, double start_v,
                    const XTLimits& limits);

/// Per-step heuristic speeds v_pre_i = (x(t_i) - x(t_{i-1})) / dt_i with x
/// linearly interpolated along the profile.
std::vector<double> profile_to_vpre(const XTProfile& profile,
                                    std::span<const double> dt_schedule);

/// Writes "t,x,occupied" rows for debugging.
void dump_xt_grid(const XTGrid& grid, std::ostream& os);

}  // namespace hmpc
