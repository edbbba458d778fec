#pragma once

#include <vector>

#include "nanotip/config.hpp"
#include "nanotip/coupling.hpp"
#include "nanotip/fdtd.hpp"
#include "nanotip/monitors.hpp"

namespace nanotip {

/// Grid-derived quantities shown by `validate` before anything runs.
struct RunPlan {
  GridGeometry geometry;
  int steps_per_period = 0;
  double dt_fs = 0.0;
  double courant_limit_fs = 0.0;
  long max_steps = 0;
  double memory_bytes = 0.0;
  int monitor_plane = 0;  ///< z node index of monitor M
};

/// Throws ConfigurationError when the scene is invalid or the monitors do not fit.
RunPlan plan_run(const SimulationConfig& config);

struct SimulationResult {
  CouplingReport report;
  RunOutcome outcome;
  PlanePhasors monitor;  ///< phasors of monitor M
  std::vector<GuidedMode> modes;
};

/// One complete simulation: rasterize, step to steady state, measure, decompose.
/// `threads` overrides config.run.threads when positive.
SimulationResult run_simulation(const SimulationConfig& config, int threads = 0);

/// Guided modes of the primary structure used for the decomposition (empty without one).
std::vector<GuidedMode> primary_modes(const SimulationConfig& config);

}  // namespace nanotip
