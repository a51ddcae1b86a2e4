#include "hmpc/xt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <queue>

namespace hmpc {

namespace {

// Piecewise-linear obstacle longitudinal position / lateral position at time
// t, extrapolating with the end segments (exact for constant velocity).
Eigen::Vector3d pose_at(const PredictedObstacle& pred, double t) {
  const auto& times = pred.times;
  const auto& poses = pred.poses;
  if (poses.size() == 1) return poses.front();
  int hi = 1;
  while (hi < static_cast<int>(times.size()) - 1 && times[hi] < t) ++hi;
  const int lo = hi - 1;
  const double span = times[hi] - times[lo];
  const double w = span > 0.0 ? (t - times[lo]) / span : 0.0;
  return poses[lo] + w * (poses[hi] - poses[lo]);
}

}  // namespace

bool XTGrid::is_occupied(int slice, double x) const {
  if (slice < 0 || slice >= slices) return false;
  const int c = cell_of(x);
  if (c < 0 || c >= cells) return false;
  return occupied[static_cast<std::size_t>(slice) * cells + c] != 0;
}

double XTGrid::soft_at(int slice, double x) const {
  if (slice < 0 || slice >= slices) return 0.0;
  const int c = cell_of(x);
  if (c < 0 || c >= cells) return 0.0;
  return soft_cost[static_cast<std::size_t>(slice) * cells + c];
}

XTGrid build_xt_grid(const VehicleState& ego,
                     std::span<const PredictedObstacle> predictions,
                     const LateralInterval& corridor, const XTConfig& config) {
  if (!(corridor.hi > corridor.lo)) {
    throw DomainError("build_xt_grid: corridor interval is empty");
  }
  XTGrid grid;
  grid.config = config;
  grid.x_origin = ego.x;
  grid.slices = static_cast<int>(std::round(config.t_extent / config.t_res)) + 1;
  grid.cells = static_cast<int>(std::ceil(config.x_extent / config.x_res));
  grid.bands.resize(grid.slices);
  grid.occupied.assign(static_cast<std::size_t>(grid.slices) * grid.cells, 0);
  grid.soft_cost.assign(static_cast<std::size_t>(grid.slices) * grid.cells, 0.0f);

  for (const PredictedObstacle& pred : predictions) {
    if (!config.include_rear_obstacles) {
      const Eigen::Vector3d at0 = pose_at(pred, 0.0);
      if (at0[0] + pred.l1 + config.margin < ego.x) continue;
    }
    for (int k = 0; k < grid.slices; ++k) {
      const double t = grid.slice_time(k);
      const Eigen::Vector3d pose = pose_at(pred, t);
      if (!corridor.contains(pose[1])) continue;
      XTBand band;
      band.lo = pose[0] - pred.l2 - config.margin;
      band.hi = pose[0] + pred.l1 + config.margin;
      band.velocity =
          pred.velocities.empty() ? 0.0 : pred.velocities.front() * std::cos(pose[2]);
      grid.bands[k].push_back(band);

      const int c_lo = std::max(0, grid.cell_of(band.lo));
      const int c_hi = std::min(grid.cells - 1, grid.cell_of(band.hi));
      for (int c = c_lo; c <= c_hi; ++c) {
        grid.occupied[static_cast<std::size_t>(k) * grid.cells + c] = 1;
      }
      // Soft proximity cost decaying linearly over soft_range on both sides.
      if (config.soft_range > 0.0) {
        const int reach =
            static_cast<int>(std::ceil(config.soft_range / config.x_res));
        for (int c = std::max(0, c_lo - reach);
             c <= std::min(grid.cells - 1, c_hi + reach); ++c) {
          const double center = grid.x_origin + (c + 0.5) * config.x_res;
          double gap = 0.0;
          if (center < band.lo) gap = band.lo - center;
          if (center > band.hi) gap = center - band.hi;
          const float s = static_cast<float>(
              std::max(0.0, 1.0 - gap / config.soft_range));
          float& cell = grid.soft_cost[static_cast<std::size_t>(k) * grid.cells + c];
          cell = std::max(cell, s);
        }
      }
    }
  }
  return grid;
}

namespace {

struct SearchNode {
  int slice = 0;
  double x = 0.0;
  double v = 0.0;
  double g = 0.0;
  double accel_in = 0.0;
  int parent = -1;
  bool terminal = false;
};

struct QueueEntry {
  double f = 0.0;
  double accel_mag = 0.0;
  std::uint64_t seq = 0;
  int node = -1;
  bool operator>(const QueueEntry& o) const {
    if (f != o.f) return f > o.f;
    if (accel_mag != o.accel_mag) return accel_mag > o.accel_mag;
    return seq > o.seq;
  }
};

// Advance (x, v) over one slice under constant acceleration, clamping v to
// [0, v_max] exactly (piecewise integration when the clamp engages).
void integrate_primitive(double x, double v, double a, double dt, double v_max,
                         double* x_out, double* v_out) {
  double v_end = v + a * dt;
  if (a > 0.0 && v_end > v_max) {
    const double t_star = (v_max - v) / a;
    *x_out = x + v * t_star + 0.5 * a * t_star * t_star + v_max * (dt - t_star);
    *v_out = v_max;
  } else if (a < 0.0 && v_end < 0.0) {
    const double t_star = v / std::max(-a, 1e-12);
    *x_out = x + v * t_star + 0.5 * a * t_star * t_star;
    *v_out = 0.0;
  } else {
    *x_out = x + v * dt + 0.5 * a * dt * dt;
    *v_out = v_end;
  }
}

// A step collides with a band when the ego position relative to the moving
// band crosses or enters it between slices (linear relative motion).
bool sweep_hits_bands(const XTGrid& grid, int slice_from, double x_from,
                      double x_to) {
  const auto& from_bands = grid.bands[slice_from];
  const auto& to_bands = grid.bands[slice_from + 1];
  // Bands are emitted in the same obstacle order for consecutive slices when
  // the obstacle stays in the corridor; match conservatively by overlap of
  // either endpoint otherwise.
  for (const XTBand& b1 : to_bands) {
    if (x_to >= b1.lo && x_to <= b1.hi) return true;
  }
  for (const XTBand& b0 : from_bands) {
    if (x_from >= b0.lo && x_from <= b0.hi) return true;
    // Relative sweep: where does the band end up one slice later?
    const double shift = b0.velocity * grid.config.t_res;
    const double lo1 = b0.lo + shift;
    const double hi1 = b0.hi + shift;
    const double rel0 = x_from - 0.5 * (b0.lo + b0.hi);
    const double rel1 = x_to - 0.5 * (lo1 + hi1);
    const double half = 0.5 * (b0.hi - b0.lo);
    if (std::min(rel0, rel1) <= half && std::max(rel0, rel1) >= -half) {
      return true;
    }
  }
  return false;
}

XTProfile follow_fallback_profile(const XTGrid& grid, double start_x,
                                  double start_v, const XTLimits& limits) {
  // Nearest band ahead at slice 0 sets the target speed.
  double target_v = 0.0;
  double band_lo = std::numeric_limits<double>::infinity();
  bool found = false;
  for (const XTBand& b : grid.bands.empty() ? std::vector<XTBand>{}
                                            : grid.bands.front()) {
    if (b.hi >= start_x && b.lo < band_lo) {
      band_lo = b.lo;
      target_v = std::clamp(b.velocity, 0.0, limits.v_max);
      found = true;
    }
  }
  if (!found) band_lo = std::numeric_limits<double>::infinity();

  XTProfile profile;
  profile.follow_fallback = true;
  double x = start_x;
  double v = start_v;
  profile.nodes.push_back({0.0, x, v});
  const double dt = grid.config.t_res;
  for (int k = 1; k < grid.slices; ++k) {
    v = std::max(target_v, v - limits.a_max * dt);
    x += v * dt;
    const double cap = band_lo + target_v * grid.slice_time(k) - 1.0;
    if (x > cap) {
      x = cap;
      v = target_v;
    }
    profile.nodes.push_back({grid.slice_time(k), x, v});
  }
  return profile;
}

}  // namespace

XTProfile search_xt(const XTGrid& grid, double start_x, double start_v,
                    const XTLimits& limits) {
  if (grid.is_occupied(0, start_x)) {
    return follow_fallback_profile(grid, start_x, start_v, limits);
  }

  const XTConfig& cfg = grid.config;
  const double dt = cfg.t_res;
  const int v_buckets =
      static_cast<int>(std::ceil(limits.v_max / cfg.v_bucket)) + 1;
  const double grid_end = grid.x_origin + cfg.x_extent;

  std::vector<SearchNode> nodes;
  nodes.reserve(4096);
  std::vector<double> best_g(
      static_cast<std::size_t>(grid.slices) * grid.cells * v_buckets,
      std::numeric_limits<double>::infinity());

  const auto dedup_index = [&](int slice, double x, double v) -> long {
    const int c = grid.cell_of(x);
    if (c < 0 || c >= grid.cells) return -1;
    const int vb = std::min(v_buckets - 1,
                            static_cast<int>(std::floor(v / cfg.v_bucket)));
    return (static_cast<long>(slice) * grid.cells + c) * v_buckets + vb;
  };

  // Admissible remaining-cost bound: exact minimum time to exit under full
  // acceleration (obstacles ignored), plus the unavoidable terminal-speed
  // shortfall.
  const auto heuristic = [&](int slice, double x, double v) {
    const int remaining = grid.slices - 1 - slice;
    const double dist = grid_end - x;
    int steps_to_exit = remaining;
    if (dist <= 0.0) {
      steps_to_exit = 0;
    } else {
      const double t_ramp = (limits.v_max - v) / limits.a_max;
      const double x_ramp = v * t_ramp + 0.5 * limits.a_max * t_ramp * t_ramp;
      double t_exit;
      if (x_ramp >= dist) {
        t_exit = (-v + std::sqrt(v * v + 2.0 * limits.a_max * dist)) /
                 limits.a_max;
      } else {
        t_exit = t_ramp + (dist - x_ramp) / limits.v_max;
      }
      steps_to_exit = std::min(
          remaining, static_cast<int>(std::ceil(t_exit / dt - 1e-9)));
    }
    const double h_time = cfg.w_time * dt * steps_to_exit;
    const double v_reachable =
        std::min(limits.v_max, v + limits.a_max * remaining * dt);
    const double h_term =
        cfg.w_terminal * std::max(0.0, limits.v_max - v_reachable);
    return h_time + h_term;
  };

  std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> open;
  std::uint64_t seq = 0;

  nodes.push_back({0, start_x, start_v, 0.0, 0.0, -1, false});
  {
    const long di = dedup_index(0, start_x, start_v);
    if (di >= 0) best_g[di] = 0.0;
  }
  open.push({heuristic(0, start_x, start_v), 0.0, seq++, 0, });

  const double accels[5] = {-limits.a_max, -0.5 * limits.a_max, 0.0,
                            0.5 * limits.a_max, limits.a_max};

  int best_terminal = -1;
  while (!open.empty()) {
    const QueueEntry entry = open.top();
    open.pop();
    const SearchNode node = nodes[entry.node];
    if (node.terminal) {
      best_terminal = entry.node;
      break;
    }
    {
      const long di = dedup_index(node.slice, node.x, node.v);
      if (di >= 0 && node.g > best_g[di] + 1e-12) continue;  // stale entry
    }
    if (node.slice >= grid.slices - 1 || node.x >= grid_end) {
      // Terminal: charge the terminal-speed shortfall and requeue as done.
      SearchNode done = node;
      done.terminal = true;
      done.parent = entry.node;  // keep the final state in the chain
      const double total =
          node.g + cfg.w_terminal * std::max(0.0, limits.v_max - node.v);
      nodes.push_back(done);
      open.push({total, 0.0, seq++, static_cast<int>(nodes.size()) - 1});
      continue;
    }
    for (double a : accels) {
      double x_next, v_next;
      integrate_primitive(node.x, node.v, a, dt, limits.v_max, &x_next, &v_next);
      if (x_next < grid.x_origin) continue;
      if (grid.is_occupied(node.slice + 1, x_next)) continue;
      if (sweep_hits_bands(grid, node.slice, node.x, x_next)) continue;
      const double step_cost =
          cfg.w_time * dt + cfg.w_prox * grid.soft_at(node.slice + 1, x_next);
      const double g_next = node.g + step_cost;
      const long di = dedup_index(node.slice + 1, x_next, v_next);
      if (di >= 0) {
        if (g_next >= best_g[di] - 1e-12) continue;
        best_g[di] = g_next;
      }
      nodes.push_back({node.slice + 1, x_next, v_next, g_next, a, entry.node,
                       false});
      open.push({g_next + heuristic(node.slice + 1, x_next, v_next),
                 std::abs(a), seq++, static_cast<int>(nodes.size()) - 1});
    }
  }

  if (best_terminal < 0) {
    return follow_fallback_profile(grid, start_x, start_v, limits);
  }

  XTProfile profile;
  profile.cost = nodes[best_terminal].g +
                 cfg.w_terminal *
                     std::max(0.0, limits.v_max - nodes[best_terminal].v);
  std::vector<int> chain;
  for (int i = best_terminal; i >= 0; i = nodes[i].parent) {
    if (!nodes[i].terminal) chain.push_back(i);
    if (nodes[i].parent < 0) break;
  }
  std::reverse(chain.begin(), chain.end());
  for (int i : chain) {
    profile.nodes.push_back(
        {grid.slice_time(nodes[i].slice), nodes[i].x, nodes[i].v});
  }
  // Extend an early grid exit at constant speed so the profile spans t_extent.
  while (!profile.nodes.empty() &&
         profile.nodes.back().t < cfg.t_extent - 1e-9) {
    const XTProfileNode& last = profile.nodes.back();
    profile.nodes.push_back({last.t + dt, last.x + last.v * dt, last.v});
  }
  return profile;
}

std::vector<double> profile_to_vpre(const XTProfile& profile,
                                    std::span<const double> dt_schedule) {
  if (profile.nodes.empty()) {
    throw DomainError("profile_to_vpre: empty profile");
  }
  const auto x_at = [&](double t) {
    const auto& nodes = profile.nodes;
    if (t <= nodes.front().t) return nodes.front().x;
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      if (t <= nodes[i].t) {
        const double span = nodes[i].t - nodes[i - 1].t;
        const double w = span > 0.0 ? (t - nodes[i - 1].t) / span : 0.0;
        return nodes[i - 1].x + w * (nodes[i].x - nodes[i - 1].x);
      }
    }
    return nodes.back().x + (t - nodes.back().t) * nodes.back().v;
  };

  std::vector<double> v_pre;
  v_pre.reserve(dt_schedule.size());
  double t_prev = 0.0;
  for (double dt : dt_schedule) {
    const double t = t_prev + dt;
    v_pre.push_back(dt > 0.0 ? (x_at(t) - x_at(t_prev)) / dt : 0.0);
    t_prev = t;
  }
  return v_pre;
}

void dump_xt_grid(const XTGrid& grid, std::ostream& os) {
  os << "t,x,occupied\n";
  for (int k = 0; k < grid.slices; ++k) {
    for (int c = 0; c < grid.cells; ++c) {
      os << grid.slice_time(k) << ','
         << grid.x_origin + (c + 0.5) * grid.config.x_res << ','
         << int(grid.occupied[static_cast<std::size_t>(k) * grid.cells + c])
         << '\n';
    }
  }
}

}  // namespace hmpc
