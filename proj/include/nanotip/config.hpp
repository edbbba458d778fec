#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nanotip/excitation.hpp"
#include "nanotip/scene.hpp"

namespace nanotip {

/// Named grid resolutions: coarse 25 nm, medium 15 nm, fine 10 nm.
double preset_grid_step(const std::string& preset);
std::vector<std::string> preset_names();

struct MonitorSettings {
  double flux_distance = 5.0;  ///< monitor M sits this far along +z from the emitter
  int box_half_cells = 3;      ///< half-width of the emitted-power box
  bool modal = true;           ///< decompose monitor M into guided modes of the primary
};

struct RunSettings {
  std::string preset = "coarse";
  double courant = 0.99;
  double shutoff = 1e-3;
  int window_periods = 5;
  int max_periods = 400;
  int threads = 1;
  std::string case_id = "custom";
  std::optional<std::string> snapshot;  ///< field dump path written at the end of the run
};

/// Parameters that identify a run inside a case (absent ones are not applicable).
struct CaseParams {
  std::optional<double> a;
  std::optional<double> b_d;
  std::optional<double> d;
};

struct SimulationConfig {
  Scene scene;
  DipoleSource source;
  MonitorSettings monitors;
  RunSettings run;
  CaseParams params;
};

/// Strict parse: unknown keys anywhere are a ConfigurationError naming the key path.
SimulationConfig parse_config(const nlohmann::json& doc);
nlohmann::json to_json(const SimulationConfig& config);
SimulationConfig load_config(const std::string& path);

/// Applies "dotted.key=value" to a document; the value is parsed as JSON and
/// falls back to a plain string. Array elements are addressed by index.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Geometry of one point of a reproduction case: a primary tip along +z with an
/// optional coaxial tip or transverse wire in front of it.
struct CaseGeometry {
  std::string case_id = "custom";
  std::string primary_material = "silica";
  double a = 0.43;
  SecondaryKind secondary = SecondaryKind::none;
  std::string secondary_material = "silica";
  double b_d = 0.43;
  double d = 0.2;
  Orientation orientation = Orientation::radial;
};

/// Desk-scale configuration for a case point at a preset. The domain is the
/// 3 x 3 x 8 um desk box, lengthened along z when a large wire would otherwise
/// reach the lower PML and widened when the monitor could not span 1.5a.
SimulationConfig make_case_config(const CaseGeometry& geometry, const std::string& preset);

/// snt_alone_p1..p3, case1_p1 .. case4_p3, case5, case6, case7, vacuum.
std::vector<std::string> builtin_names();
CaseGeometry builtin_geometry(const std::string& name);
SimulationConfig builtin_config(const std::string& name, const std::string& preset = "coarse");

}  // namespace nanotip
