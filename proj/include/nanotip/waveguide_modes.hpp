#pragma once

#include <array>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace nanotip {

struct ModeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ModeFamily { TE, TM, HE, EH };

std::string to_string(ModeFamily f);

struct ModeLabel {
  ModeFamily family = ModeFamily::HE;
  int nu = 1;  ///< azimuthal order
  int m = 1;   ///< radial order
  /// 0: Ez ~ cos(nu*theta) ("even"), 1: rotated by pi/(2 nu) ("odd"). Always 0 for nu = 0.
  int polarization = 0;

  /// "HE11", "TE01", ...
  std::string name() const;
  /// name() plus an e/o suffix for the two orientations of nu >= 1 modes.
  std::string str() const;
  friend bool operator==(const ModeLabel&, const ModeLabel&) = default;
};

/// Step-index cylinder: core radius a (um), core/cladding indices.
struct StepIndexFiber {
  double radius = 0.0;
  double n_core = 1.0;
  double n_clad = 1.0;
  double wavelength = 0.620;
};

/// Complex phasor field (engineering convention, exp(j(w t - beta z))) at a point.
struct ModeField {
  std::array<std::complex<double>, 3> e{};
  std::array<std::complex<double>, 3> h{};
};

/// A bound mode. Fields scale with `amplitude`; at amplitude 1 the
/// longitudinal field has unit core coefficient (Hz for TE, Ez otherwise).
struct GuidedMode {
  ModeLabel label;
  StepIndexFiber fiber;
  double n_eff = 0.0;
  double u = 0.0;
  double w = 0.0;
  double amplitude = 1.0;
  double normalization_power = 0.0;

  double v() const;
  double beta() const;
  /// Transverse and longitudinal E, H at (x, y) relative to the fiber axis.
  ModeField field(double x, double y) const;
  /// Copy with every field sample multiplied by s (power by s^2).
  GuidedMode scaled(double s) const;
};

/// V = (2 pi a / lambda) sqrt(n_core^2 - n_clad^2). Throws ModeError unless n_core > n_clad >= 1.
double v_number(double radius, double n_core, double n_clad, double wavelength);

/// All bound modes, sorted by descending n_eff; both orientations of every
/// nu >= 1 mode are listed (even first). Each band is scanned with
/// `scan_points` samples in n_eff and refined by bisection.
std::vector<GuidedMode> solve_modes(const StepIndexFiber& fiber, int scan_points = 2000);

ModeField mode_profile(const GuidedMode& mode, double x, double y);

/// 0.5 Re integral (E x H*) . z over the whole cross-section.
double mode_power(const GuidedMode& mode);

/// Fraction of mode_power carried inside r < a.
double core_power_fraction(const GuidedMode& mode);

/// 0.25 integral (E_i x H_j* + E_j* x H_i) . z over the cross-section.
std::complex<double> mode_cross_overlap(const GuidedMode& a, const GuidedMode& b);

/// V at which a mode family/order stops being guided (0 for HE11).
double cutoff_v(const ModeLabel& label, double n_core, double n_clad);

}  // namespace nanotip
