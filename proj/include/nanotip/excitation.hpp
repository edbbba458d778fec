#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "nanotip/fdtd.hpp"

namespace nanotip {

struct ConfigurationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Emitter orientation relative to the primary tip (axis +z): radial = x,
/// azimuthal = y (along a transverse wire), axial = z.
enum class Orientation { radial, azimuthal, axial };

std::string to_string(Orientation o);
Orientation parse_orientation(const std::string& text);
inline int component_of(Orientation o) { return static_cast<int>(o); }

/// Classical point dipole: a CW current moment with a raised-cosine turn-on.
struct DipoleSource {
  Vec3 position;
  Orientation orientation = Orientation::radial;
  double wavelength = 0.620;  ///< um
  double amplitude = 1.0;     ///< current moment, source units
  double ramp_cycles = 20.0;

  double angular_frequency() const { return 2.0 * kPi / wavelength; }
  double envelope(double t) const;
  /// Current moment at internal time t.
  double moment(double t) const;
};

/// Analytic time-averaged power radiated by the source in vacuum,
/// k^2 p^2 / (12 pi) with eta0 = 1.
double vacuum_dipole_power(const DipoleSource& source);

struct EdgeWeight {
  int component;
  int i, j, k;
  double weight;
};

/// Trilinear allocation of the dipole among the eight nearest parallel Yee
/// edges; zero weights are dropped. Throws ConfigurationError in the PML.
std::vector<EdgeWeight> edge_weights(const DipoleSource& source, const FdtdEngine& engine);

/// Current densities (moment * weight / dx^3) on the source edges at time t.
std::vector<EdgeCurrent> inject(const DipoleSource& source, const FdtdEngine& engine, double t);

/// Reusable SourceFn with precomputed weights.
SourceFn make_source_fn(const DipoleSource& source, const FdtdEngine& engine);

}  // namespace nanotip
