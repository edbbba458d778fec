#include "nanotip/excitation.hpp"

#include <cmath>

namespace nanotip {

std::string to_string(Orientation o) {
  switch (o) {
    case Orientation::radial: return "radial";
    case Orientation::azimuthal: return "azimuthal";
    case Orientation::axial: return "axial";
  }
  return "radial";
}

Orientation parse_orientation(const std::string& text) {
  if (text == "radial") return Orientation::radial;
  if (text == "azimuthal") return Orientation::azimuthal;
  if (text == "axial") return Orientation::axial;
  throw ConfigurationError("orientation must be radial, azimuthal or axial, got '" + text + "'");
}

double DipoleSource::envelope(double t) const {
  const double ramp = ramp_cycles * wavelength;
  if (t <= 0.0) return 0.0;
  if (ramp <= 0.0 || t >= ramp) return 1.0;
  return 0.5 * (1.0 - std::cos(kPi * t / ramp));
}

double DipoleSource::moment(double t) const {
  return amplitude * envelope(t) * std::sin(angular_frequency() * t);
}

double vacuum_dipole_power(const DipoleSource& source) {
  const double k = source.angular_frequency();
  return k * k * source.amplitude * source.amplitude / (12.0 * kPi);
}

std::vector<EdgeWeight> edge_weights(const DipoleSource& source, const FdtdEngine& engine) {
  const auto& g = engine.geometry();
  const int c = component_of(source.orientation);
  double frac[3];
  int base[3];
  for (int a = 0; a < 3; ++a) {
    double idx = g.index_of(a, source.position[a]);
    if (a == c) idx -= 0.5;
    // Snap values within roundoff of a lattice point so degenerate weights stay exact.
    const double r = std::round(idx);
    if (std::abs(idx - r) < 1e-9) idx = r;
    base[a] = static_cast<int>(std::floor(idx));
    frac[a] = idx - base[a];
    const int lo = engine.interior_begin(a);
    const int hi = engine.interior_end(a);
    if (base[a] < lo || base[a] + (frac[a] > 0.0 ? 1 : 0) > hi) {
      throw ConfigurationError("dipole source position lies in the PML or outside the grid");
    }
  }
  std::vector<EdgeWeight> out;
  for (int dz = 0; dz < 2; ++dz) {
    for (int dy = 0; dy < 2; ++dy) {
      for (int dx = 0; dx < 2; ++dx) {
        const double w = (dx ? frac[0] : 1.0 - frac[0]) * (dy ? frac[1] : 1.0 - frac[1]) *
                         (dz ? frac[2] : 1.0 - frac[2]);
        if (w == 0.0) continue;
        out.push_back({c, base[0] + dx, base[1] + dy, base[2] + dz, w});
      }
    }
  }
  return out;
}

std::vector<EdgeCurrent> inject(const DipoleSource& source, const FdtdEngine& engine, double t) {
  const double dx = engine.geometry().dx;
  const double m = source.moment(t) / (dx * dx * dx);
  std::vector<EdgeCurrent> out;
  for (const auto& w : edge_weights(source, engine)) {
    out.push_back({w.component, w.i, w.j, w.k, m * w.weight});
  }
  return out;
}

SourceFn make_source_fn(const DipoleSource& source, const FdtdEngine& engine) {
  const double dx = engine.geometry().dx;
  auto weights = edge_weights(source, engine);
  return [source, weights, inv_vol = 1.0 / (dx * dx * dx)](double t, std::vector<EdgeCurrent>& out) {
    const double m = source.moment(t) * inv_vol;
    if (m == 0.0) return;
    for (const auto& w : weights) out.push_back({w.component, w.i, w.j, w.k, m * w.weight});
  };
}

}  // namespace nanotip
