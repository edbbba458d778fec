#include "nanotip/simulation.hpp"

#include <cmath>

#include "nanotip/snapshot.hpp"

namespace nanotip {

namespace {

std::string violations_text(const std::vector<Violation>& v) {
  std::string out;
  for (const auto& x : v) out += "\n  " + x.subject + ": " + x.message;
  return out;
}

}  // namespace

RunPlan plan_run(const SimulationConfig& cfg) {
  const auto violations = validate_scene(cfg.scene);
  if (!violations.empty()) throw ConfigurationError("invalid scene:" + violations_text(violations));
  RunPlan p;
  p.geometry = GridGeometry::from_domain(cfg.scene.domain);
  const double dx = cfg.scene.domain.grid_step;
  p.steps_per_period = steps_per_period(cfg.source.wavelength, dx, cfg.run.courant);
  p.dt_fs = internal_to_fs(cfg.source.wavelength / p.steps_per_period);
  p.courant_limit_fs = courant_dt(dx, 1.0);
  p.max_steps = static_cast<long>(cfg.run.max_periods) * p.steps_per_period;
  const double padded = double(p.geometry.nx + 2) * (p.geometry.ny + 2) * (p.geometry.nz + 2);
  // Six field arrays, three permittivity and three update-coefficient arrays, all float.
  p.memory_bytes = padded * 12.0 * sizeof(float);

  const double z_m = cfg.source.position.z + cfg.monitors.flux_distance;
  p.monitor_plane = static_cast<int>(std::lround(p.geometry.index_of(2, z_m)));
  const int pml = cfg.scene.domain.pml_cells;
  if (p.monitor_plane < pml || p.monitor_plane > p.geometry.nz - 1 - pml) {
    throw ConfigurationError("monitor M at z = " + std::to_string(z_m) + " um falls outside the non-PML region");
  }
  return p;
}

std::vector<GuidedMode> primary_modes(const SimulationConfig& cfg) {
  if (!cfg.monitors.modal || !cfg.scene.pair) return {};
  const auto& prim = cfg.scene.pair->primary;
  const double n_core = cfg.scene.material_of(prim).refractive_index;
  if (n_core <= cfg.scene.background_index) return {};
  return solve_modes({prim.radius, n_core, cfg.scene.background_index, cfg.source.wavelength});
}

SimulationResult run_simulation(const SimulationConfig& cfg, int threads) {
  const int nthreads = threads > 0 ? threads : cfg.run.threads;
  if (nthreads < 1) throw ConfigurationError("thread count must be at least 1");
  const RunPlan plan = plan_run(cfg);

  RasterOptions ro;
  ro.threads = nthreads;
  const PermittivityGrid eps = rasterize(cfg.scene, ro);

  GridSpec spec;
  spec.geometry = plan.geometry;
  spec.dt = cfg.source.wavelength / plan.steps_per_period;
  spec.pml.cells = cfg.scene.domain.pml_cells;
  FdtdEngine engine(spec, eps, nthreads);
  FieldState state = engine.make_state();

  const double omega = cfg.source.angular_frequency();
  DftBoxMonitor box = box_around(engine, cfg.source.position, cfg.monitors.box_half_cells, omega);
  DftPlaneMonitor plane(engine, 2, plan.monitor_plane, engine.interior_begin(0), engine.interior_end(0),
                        engine.interior_begin(1), engine.interior_end(1), omega, +1);
  std::vector<FieldObserver*> observers{&box, &plane};

  StopRule stop;
  stop.kind = StopRule::Kind::auto_shutoff;
  stop.steps_per_period = plan.steps_per_period;
  stop.warmup_steps = static_cast<long>(std::ceil(cfg.source.ramp_cycles)) * plan.steps_per_period;
  stop.window_periods = cfg.run.window_periods;
  stop.shutoff = cfg.run.shutoff;
  stop.max_steps = plan.max_steps;

  SimulationResult result;
  result.outcome = run_until(engine, state, make_source_fn(cfg.source, engine), observers, stop);
  if (!plane.has_window()) throw ConfigurationError("max_periods too small for one measurement window");
  if (cfg.run.snapshot) write_field_snapshot(*cfg.run.snapshot, engine, state);

  result.monitor = plane.phasors();
  result.modes = primary_modes(cfg);

  RunMeasurements m;
  m.p_total = total_emitted_power(box);
  m.p_flux = plane.poynting_power();
  m.p_vacuum = vacuum_dipole_power(cfg.source);
  m.monitor = &result.monitor;
  m.converged = result.outcome.converged;
  m.steps = result.outcome.steps;
  m.windows = result.outcome.windows;
  m.last_change = result.outcome.last_change;

  RunKey key;
  key.case_id = cfg.run.case_id;
  key.a = cfg.params.a;
  key.b_d = cfg.params.b_d;
  key.d = cfg.params.d;
  key.orientation = cfg.source.orientation;
  key.preset = cfg.run.preset;
  key.grid_step = cfg.scene.domain.grid_step;
  result.report = build_report(key, m, result.modes, cfg.run.shutoff);
  return result;
}

}  // namespace nanotip
