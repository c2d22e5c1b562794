#pragma once

/// Time loop over a RunConfig with snapshot and per-step callbacks.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "morpho/config.hpp"
#include "morpho/io.hpp"
#include "morpho/timestepper.hpp"

namespace morpho {

struct RunObserver {
  std::function<void(const SimState&, std::size_t snapshot_index)> on_snapshot;
  std::function<void(const StepStats&)> on_step;
};

struct RunResult {
  SimState final_state;
  double initial_solvent_mass = 0.0;
  std::vector<StepStats> stats;
};

/// Step count: round(t_max / tau). Snapshots fire at the first time level at
/// or after each requested time.
inline RunResult run(const RunConfig& cfg, const RunObserver& obs = {}, std::size_t max_steps = 0) {
  cfg.validate();
  auto disc = std::make_shared<const Discretization>(cfg.build_mesh());
  Timestepper ts(disc, cfg.params, cfg.tau, cfg.solver);
  SimState s = initialize(*disc, cfg.params, cfg.initial);

  std::vector<double> pending = cfg.snapshot_times;
  std::sort(pending.begin(), pending.end());
  std::size_t next_snap = 0, snap_index = 0;
  auto emit = [&](const SimState& st) {
    while (next_snap < pending.size() && pending[next_snap] <= st.time + 0.5 * cfg.tau) {
      if (obs.on_snapshot) obs.on_snapshot(st, snap_index);
      ++snap_index;
      // several requested times can map to the same level; write it once
      while (next_snap < pending.size() && pending[next_snap] <= st.time + 0.5 * cfg.tau) ++next_snap;
    }
  };

  RunResult res{s, ts.solvent_mass(s), {}};
  emit(s);
  std::size_t steps = cfg.step_count();
  if (max_steps > 0) steps = std::min(steps, max_steps);
  res.stats.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    StepStats st = ts.advance(s);
    if (obs.on_step) obs.on_step(st);
    res.stats.push_back(std::move(st));
    emit(s);
  }
  res.final_state = std::move(s);
  return res;
}

/// Runs `cfg`, writing snapshots and stats.csv into the resolved output directory.
inline RunResult simulate_to_disk(const RunConfig& cfg, std::size_t max_steps = 0) {
  const auto dir = resolve_output_dir(cfg.output_dir);
  const Mesh mesh = cfg.build_mesh();
  RunObserver obs;
  obs.on_snapshot = [&](const SimState& s, std::size_t i) {
    const std::string ext = cfg.dimension == 1 ? ".csv" : ".vtk";
    write_snapshot(s, mesh, dir / ("snapshot_" + std::to_string(i) + ext));
  };
  RunResult r = run(cfg, obs, max_steps);
  if (!r.stats.empty()) write_stats_log(r.stats, dir / "stats.csv", {cfg.record_timings, {}});
  return r;
}

}  // namespace morpho
