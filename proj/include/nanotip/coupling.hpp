#pragma once

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "nanotip/excitation.hpp"
#include "nanotip/monitors.hpp"
#include "nanotip/waveguide_modes.hpp"

namespace nanotip {

struct CouplingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Allowance for discretization error in the efficiency invariants.
inline constexpr double kEtaAllowance = 0.02;

/// Overlap of monitor phasors with a mode, normalised so the mode itself maps to 1:
/// a = 1/4 int (E_mon x H_m* + E_m* x H_mon) . z dA / P_m.
/// Phasors are bilinearly interpolated to 2x2 Gauss-Legendre points per cell.
/// `axis_x`, `axis_y` locate the waveguide axis in the monitor plane.
std::complex<double> mode_amplitude(const PlanePhasors& monitor, const GuidedMode& mode, double axis_x = 0.0,
                                    double axis_y = 0.0);

/// Amplitudes for several modes sharing one set of quadrature points.
std::vector<std::complex<double>> mode_amplitudes(const PlanePhasors& monitor, const std::vector<GuidedMode>& modes,
                                                  double axis_x = 0.0, double axis_y = 0.0);

struct ModePower {
  ModeLabel label;
  double n_eff = 0.0;
  std::complex<double> amplitude;
  double power = 0.0;  ///< |a|^2 P_m
};

/// Raw outputs of one simulation that feed a report.
struct RunMeasurements {
  double p_total = 0.0;   ///< net flux out of the box around the emitter
  double p_flux = 0.0;    ///< flux through monitor M along +z
  double p_vacuum = 0.0;  ///< analytic vacuum power of the same dipole
  const PlanePhasors* monitor = nullptr;  ///< needed only when modes are given
  bool converged = false;
  long steps = 0;
  int windows = 0;
  double last_change = 0.0;
};

/// Identity of a run inside a case/sweep.
struct RunKey {
  std::string case_id;
  std::optional<double> a;    ///< primary radius
  std::optional<double> b_d;  ///< secondary radius
  std::optional<double> d;    ///< gap
  Orientation orientation = Orientation::radial;
  std::string preset;
  double grid_step = 0.0;
};

struct CouplingReport {
  RunKey key;
  double p_total = 0.0;
  double p_flux = 0.0;
  double p_vacuum = 0.0;
  std::vector<ModePower> per_mode;
  double eta_flux = 0.0;
  double eta_modal = 0.0;
  double residual = 0.0;
  double purcell_ratio = 0.0;
  bool converged = false;
  long steps = 0;
  int windows = 0;
  double last_change = 0.0;
  double shutoff = 0.0;
  /// Invariant breaches and non-convergence; empty on a clean run.
  std::vector<std::string> flags;

  double eta() const { return eta_flux; }
};

CouplingReport build_report(const RunKey& key, const RunMeasurements& m, const std::vector<GuidedMode>& modes,
                            double shutoff);

struct OrientationAverage {
  double eta = 0.0;
  double eta_modal = 0.0;
  std::vector<std::pair<Orientation, double>> per_orientation;
};

/// Mean over the radial, azimuthal and axial reports of one scene.
/// Throws CouplingError unless exactly those three orientations of the same
/// case/geometry/preset are given.
OrientationAverage orientation_average(const std::vector<CouplingReport>& reports);

nlohmann::json to_json(const CouplingReport& r);
CouplingReport report_from_json(const nlohmann::json& j);

/// Fixed-point text with six significant digits.
std::string format_sig6(double v);

/// CSV projection: case, a, b_D, d, orientation, eta_flux, eta_modal, P_total,
/// purcell_ratio, converged, preset.
std::string report_csv_header();
std::string report_csv_row(const CouplingReport& r);

}  // namespace nanotip
