#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nanotip/parallel.hpp"
#include "nanotip/scene.hpp"

namespace nanotip {

struct DivergenceError : std::runtime_error {
  explicit DivergenceError(long step)
      : std::runtime_error("field divergence (non-finite value) detected at step " + std::to_string(step)),
        step_index(step) {}
  long step_index;
};

/// Convolutional PML grading. sigma_max is `sigma_scale` times the usual
/// optimum (order+1)/(150*pi*dx) expressed in internal units.
struct CpmlParams {
  int cells = 10;
  double order = 3.0;
  double sigma_scale = 0.8;
  double kappa_max = 5.0;
  double alpha_max = 0.05;
};

enum class Boundary { pml, periodic };

struct GridSpec {
  GridGeometry geometry;
  double dt = 0.0;  ///< internal units (c*t in um)
  CpmlParams pml;
  /// x and y terminations; z is always PML-terminated.
  std::array<Boundary, 2> lateral{Boundary::pml, Boundary::pml};

  bool has_pml(int axis) const { return axis == 2 || lateral[axis] == Boundary::pml; }
};

/// Largest stable step in femtoseconds: safety * dx / (c * sqrt(3)).
double courant_dt(double grid_step_um, double safety);

/// Integer number of steps per optical period not exceeding the Courant
/// bound; exact-period windows keep single-frequency DFTs leakage-free.
int steps_per_period(double wavelength_um, double grid_step_um, double safety);

/// A current density applied to one Yee E-edge during the next E update.
struct EdgeCurrent {
  int component = 0;
  int i = 0, j = 0, k = 0;
  double value = 0.0;
};

struct CpmlSlab {
  int axis = 0;
  int begin = 0;  ///< first index along `axis` covered by the slab
  int extent = 0;
  // psi for (E_b, E_c) and (H_b, H_c) where (axis, b, c) is cyclic.
  std::array<std::vector<float>, 2> psi_e;
  std::array<std::vector<float>, 2> psi_h;
};

struct FieldState {
  std::array<std::vector<float>, 3> e;
  std::array<std::vector<float>, 3> h;
  std::vector<CpmlSlab> cpml;
  double t = 0.0;  ///< internal time of the E field
  long step_index = 0;
};

/// Yee leapfrog with CPML on a uniform grid, relative permeability 1.
/// Field arrays use the padded layout of PermittivityGrid (x fastest).
class FdtdEngine {
 public:
  FdtdEngine(const GridSpec& spec, const PermittivityGrid& eps, int threads = 1);

  const GridSpec& spec() const { return spec_; }
  const GridGeometry& geometry() const { return spec_.geometry; }
  std::size_t at(int i, int j, int k) const {
    return static_cast<std::size_t>(i + 1) + static_cast<std::size_t>(j + 1) * sy_ +
           static_cast<std::size_t>(k + 1) * sz_;
  }
  std::size_t stride(int axis) const { return axis == 0 ? 1 : (axis == 1 ? sy_ : sz_); }
  std::size_t padded_size() const { return size_; }
  float permittivity(int component, std::size_t index) const { return eps_[component][index]; }

  FieldState make_state() const;

  /// H half step, then E full step with `currents` (evaluated at t + dt/2).
  void step(FieldState& state, std::span<const EdgeCurrent> currents) const;

  void update_h(FieldState& state) const;
  void update_e(FieldState& state, std::span<const EdgeCurrent> currents) const;

  bool all_finite(const FieldState& state) const;

  /// First and last node index of the non-PML region along an axis.
  int interior_begin(int axis) const { return spec_.has_pml(axis) ? spec_.pml.cells : 0; }
  int interior_end(int axis) const {
    return spec_.has_pml(axis) ? geometry().n(axis) - 1 - spec_.pml.cells : geometry().n(axis) - 1;
  }

 private:
  struct Profile {
    std::vector<float> inv_kappa;
    std::vector<float> b;
    std::vector<float> c;
  };

  void build_profiles();
  void wrap_periodic(std::array<std::vector<float>, 3>& f, bool upper_ghost) const;
  template <bool IsH>
  void cpml_row(FieldState& s, CpmlSlab& slab, int j, int k) const;

  GridSpec spec_;
  std::size_t sy_ = 0, sz_ = 0, size_ = 0;
  std::array<std::vector<float>, 3> eps_;
  std::array<std::vector<float>, 3> ce_;
  // Per axis: integer-node (E) and half-node (H) profiles.
  std::array<Profile, 3> prof_e_, prof_h_;
  std::unique_ptr<WorkerPool> pool_;
};

/// Something that observes the leapfrog: H is reported at t - dt/2, E at t.
class FieldObserver {
 public:
  virtual ~FieldObserver() = default;
  virtual void begin_window() = 0;
  virtual void observe_h(const FdtdEngine& engine, const FieldState& state, double t_h) = 0;
  virtual void observe_e(const FdtdEngine& engine, const FieldState& state, double t_e) = 0;
  virtual void end_window() = 0;
  /// Power from the last completed window.
  virtual double window_power() const = 0;
};

struct StopRule {
  enum class Kind { fixed, auto_shutoff };
  Kind kind = Kind::auto_shutoff;
  long fixed_steps = 0;
  /// Fixed runs accumulate over [accumulate_from, fixed_steps).
  long accumulate_from = 0;

  long steps_per_period = 0;
  long warmup_steps = 0;   ///< steps before the first shutoff window
  int window_periods = 5;
  double shutoff = 1e-3;
  long max_steps = 0;
  int finite_check_interval = 50;

  static StopRule fixed(long steps, long accumulate_from = 0);
};

struct RunOutcome {
  long steps = 0;
  bool converged = false;
  double last_change = 0.0;
  int windows = 0;
};

using SourceFn = std::function<void(double t_mid, std::vector<EdgeCurrent>& out)>;

/// Steps until the stop rule fires. In auto mode monitors are re-windowed every
/// `window_periods` optical periods after warmup and the run stops once every
/// monitor's window power changes by less than `shutoff` (relative). Hitting
/// `max_steps` is reported through `converged = false`, not thrown.
RunOutcome run_until(const FdtdEngine& engine, FieldState& state, const SourceFn& sources,
                     std::span<FieldObserver* const> monitors, const StopRule& stop);

}  // namespace nanotip
