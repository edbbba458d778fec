#include "nanotip/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace nanotip {

using nlohmann::json;

double preset_grid_step(const std::string& preset) {
  if (preset == "coarse") return 0.025;
  if (preset == "medium") return 0.015;
  if (preset == "fine") return 0.010;
  throw ConfigurationError("unknown preset '" + preset + "' (expected coarse, medium or fine)");
}

std::vector<std::string> preset_names() { return {"coarse", "medium", "fine"}; }

namespace {

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigurationError("'" + path + "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.count(key)) {
      throw ConfigurationError("unknown key '" + (path.empty() ? key : path + "." + key) + "'");
    }
  }
}

template <class T>
T get(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) throw ConfigurationError("missing key '" + path + "." + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigurationError("key '" + path + "." + key + "' has the wrong type");
  }
}

template <class T>
T get_or(const json& obj, const std::string& path, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  return get<T>(obj, path, key);
}

Vec3 get_vec3(const json& obj, const std::string& path, const char* key) {
  const auto v = get<std::vector<double>>(obj, path, key);
  if (v.size() != 3) throw ConfigurationError("key '" + path + "." + key + "' must have three components");
  return {v[0], v[1], v[2]};
}

json vec3_json(Vec3 v) { return json::array({v.x, v.y, v.z}); }

std::optional<double> opt_double(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return get<double>(obj, path, key);
}

CylinderPrimitive parse_primitive(const json& j, const std::string& path) {
  check_keys(j, path, {"name", "axis", "center", "radius", "length", "material"});
  CylinderPrimitive c;
  c.name = get<std::string>(j, path, "name");
  try {
    c.axis = AxisDirection::parse(get<std::string>(j, path, "axis"));
  } catch (const SceneError& e) {
    throw ConfigurationError(path + ".axis: " + e.what());
  }
  c.center = get_vec3(j, path, "center");
  c.radius = get<double>(j, path, "radius");
  c.length = get<double>(j, path, "length");
  c.material = get<std::string>(j, path, "material");
  return c;
}

json primitive_json(const CylinderPrimitive& c) {
  return {{"name", c.name},     {"axis", c.axis.str()}, {"center", vec3_json(c.center)},
          {"radius", c.radius}, {"length", c.length},   {"material", c.material}};
}

const CylinderPrimitive& find_primitive(const Scene& s, const std::string& name, const std::string& path) {
  for (const auto& p : s.primitives) {
    if (p.name == name) return p;
  }
  throw ConfigurationError("'" + path + "' names unknown primitive '" + name + "'");
}

// Wires sit below the primary facet; keep their far surface this far clear of the z PML.
constexpr double kWireClearance = 0.25;
constexpr double kDeskFacetZ = 2.0;
constexpr double kMonitorReach = 1.5;

}  // namespace

SimulationConfig parse_config(const json& doc) {
  check_keys(doc, "", {"domain", "materials", "primitives", "pair", "source", "monitors", "run"});
  SimulationConfig cfg;
  Scene& s = cfg.scene;

  if (doc.contains("run")) {
    const json& r = doc.at("run");
    check_keys(r, "run", {"preset", "courant", "shutoff", "window_periods", "max_periods", "threads", "case",
                          "params", "snapshot"});
    cfg.run.preset = get_or<std::string>(r, "run", "preset", cfg.run.preset);
    cfg.run.courant = get_or(r, "run", "courant", cfg.run.courant);
    cfg.run.shutoff = get_or(r, "run", "shutoff", cfg.run.shutoff);
    cfg.run.window_periods = get_or(r, "run", "window_periods", cfg.run.window_periods);
    cfg.run.max_periods = get_or(r, "run", "max_periods", cfg.run.max_periods);
    cfg.run.threads = get_or(r, "run", "threads", cfg.run.threads);
    cfg.run.case_id = get_or<std::string>(r, "run", "case", cfg.run.case_id);
    if (r.contains("snapshot") && !r.at("snapshot").is_null()) {
      cfg.run.snapshot = get<std::string>(r, "run", "snapshot");
    }
    if (r.contains("params")) {
      const json& p = r.at("params");
      check_keys(p, "run.params", {"a", "b_D", "d"});
      cfg.params.a = opt_double(p, "run.params", "a");
      cfg.params.b_d = opt_double(p, "run.params", "b_D");
      cfg.params.d = opt_double(p, "run.params", "d");
    }
  }
  if (!(cfg.run.courant > 0.0 && cfg.run.courant <= 1.0)) throw ConfigurationError("run.courant must be in (0, 1]");
  if (!(cfg.run.shutoff > 0.0)) throw ConfigurationError("run.shutoff must be positive");
  if (cfg.run.window_periods < 1) throw ConfigurationError("run.window_periods must be >= 1");
  if (cfg.run.max_periods < 1) throw ConfigurationError("run.max_periods must be >= 1");
  if (cfg.run.threads < 1) throw ConfigurationError("run.threads must be >= 1");

  if (!doc.contains("domain")) throw ConfigurationError("missing key 'domain'");
  const json& d = doc.at("domain");
  check_keys(d, "domain", {"extents", "grid_step", "pml_cells", "background_index"});
  s.domain.extents = get_vec3(d, "domain", "extents");
  s.domain.grid_step = d.contains("grid_step") ? get<double>(d, "domain", "grid_step")
                                               : preset_grid_step(cfg.run.preset);
  s.domain.pml_cells = get_or(d, "domain", "pml_cells", s.domain.pml_cells);
  s.background_index = get_or(d, "domain", "background_index", s.background_index);

  s.materials = {{"silica", silica()}, {"diamond", diamond()}, {"vacuum", vacuum()}};
  if (doc.contains("materials")) {
    const json& m = doc.at("materials");
    if (!m.is_object()) throw ConfigurationError("'materials' must be an object");
    for (const auto& [name, value] : m.items()) {
      const std::string path = "materials." + name;
      check_keys(value, path, {"refractive_index"});
      s.materials[name] = Material{name, get<double>(value, path, "refractive_index")};
    }
  }

  if (doc.contains("primitives")) {
    const json& p = doc.at("primitives");
    if (!p.is_array()) throw ConfigurationError("'primitives' must be an array");
    for (std::size_t i = 0; i < p.size(); ++i) {
      s.primitives.push_back(parse_primitive(p.at(i), "primitives[" + std::to_string(i) + "]"));
    }
  }
  for (const auto& c : s.primitives) {
    if (!s.materials.count(c.material)) {
      throw ConfigurationError("primitive '" + c.name + "' uses unknown material '" + c.material + "'");
    }
  }

  if (doc.contains("pair") && !doc.at("pair").is_null()) {
    const json& p = doc.at("pair");
    check_keys(p, "pair", {"primary", "secondary", "kind", "gap_d"});
    PairConfig pair;
    pair.primary = find_primitive(s, get<std::string>(p, "pair", "primary"), "pair.primary");
    try {
      pair.secondary_kind = parse_secondary_kind(get_or<std::string>(p, "pair", "kind", "none"));
    } catch (const SceneError& e) {
      throw ConfigurationError(std::string("pair.kind: ") + e.what());
    }
    if (p.contains("secondary") && !p.at("secondary").is_null()) {
      pair.secondary = find_primitive(s, get<std::string>(p, "pair", "secondary"), "pair.secondary");
    }
    if ((pair.secondary_kind == SecondaryKind::none) != !pair.secondary.has_value()) {
      throw ConfigurationError("pair.kind and pair.secondary disagree");
    }
    pair.gap_d = get_or(p, "pair", "gap_d", 0.0);
    s.pair = pair;
  }

  if (!doc.contains("source")) throw ConfigurationError("missing key 'source'");
  const json& src = doc.at("source");
  check_keys(src, "source", {"position", "orientation", "wavelength", "amplitude", "ramp_cycles"});
  cfg.source.position = get_vec3(src, "source", "position");
  cfg.source.orientation = parse_orientation(get_or<std::string>(src, "source", "orientation", "radial"));
  cfg.source.wavelength = get_or(src, "source", "wavelength", cfg.source.wavelength);
  cfg.source.amplitude = get_or(src, "source", "amplitude", cfg.source.amplitude);
  cfg.source.ramp_cycles = get_or(src, "source", "ramp_cycles", cfg.source.ramp_cycles);
  if (!(cfg.source.wavelength > 0.0)) throw ConfigurationError("source.wavelength must be positive");
  if (!(cfg.source.ramp_cycles >= 0.0)) throw ConfigurationError("source.ramp_cycles must be >= 0");
  s.emitter = cfg.source.position;

  if (doc.contains("monitors")) {
    const json& m = doc.at("monitors");
    check_keys(m, "monitors", {"flux_distance", "box_half_cells", "modal"});
    cfg.monitors.flux_distance = get_or(m, "monitors", "flux_distance", cfg.monitors.flux_distance);
    cfg.monitors.box_half_cells = get_or(m, "monitors", "box_half_cells", cfg.monitors.box_half_cells);
    cfg.monitors.modal = get_or(m, "monitors", "modal", cfg.monitors.modal);
  }
  if (!(cfg.monitors.flux_distance > 0.0)) throw ConfigurationError("monitors.flux_distance must be positive");
  if (cfg.monitors.box_half_cells < 1) throw ConfigurationError("monitors.box_half_cells must be >= 1");
  return cfg;
}

json to_json(const SimulationConfig& cfg) {
  const Scene& s = cfg.scene;
  json materials = json::object();
  for (const auto& [name, m] : s.materials) materials[name] = {{"refractive_index", m.refractive_index}};
  json prims = json::array();
  for (const auto& c : s.primitives) prims.push_back(primitive_json(c));
  json pair = nullptr;
  if (s.pair) {
    pair = {{"primary", s.pair->primary.name},
            {"secondary", s.pair->secondary ? json(s.pair->secondary->name) : json(nullptr)},
            {"kind", to_string(s.pair->secondary_kind)},
            {"gap_d", s.pair->gap_d}};
  }
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json run = {{"preset", cfg.run.preset},
              {"courant", cfg.run.courant},
              {"shutoff", cfg.run.shutoff},
              {"window_periods", cfg.run.window_periods},
              {"max_periods", cfg.run.max_periods},
              {"threads", cfg.run.threads},
              {"case", cfg.run.case_id},
              {"params", {{"a", opt(cfg.params.a)}, {"b_D", opt(cfg.params.b_d)}, {"d", opt(cfg.params.d)}}}};
  if (cfg.run.snapshot) run["snapshot"] = *cfg.run.snapshot;
  return {{"domain",
           {{"extents", vec3_json(s.domain.extents)},
            {"grid_step", s.domain.grid_step},
            {"pml_cells", s.domain.pml_cells},
            {"background_index", s.background_index}}},
          {"materials", materials},
          {"primitives", prims},
          {"pair", pair},
          {"source",
           {{"position", vec3_json(cfg.source.position)},
            {"orientation", to_string(cfg.source.orientation)},
            {"wavelength", cfg.source.wavelength},
            {"amplitude", cfg.source.amplitude},
            {"ramp_cycles", cfg.source.ramp_cycles}}},
          {"monitors",
           {{"flux_distance", cfg.monitors.flux_distance},
            {"box_half_cells", cfg.monitors.box_half_cells},
            {"modal", cfg.monitors.modal}}},
          {"run", run}};
}

SimulationConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot read config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigurationError("cannot parse '" + path + "': " + e.what());
  }
  return parse_config(doc);
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigurationError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string& p = parts[i];
    const bool last = i + 1 == parts.size();
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(p);
      } catch (const std::exception&) {
        throw ConfigurationError("override '" + key + "': '" + p + "' is not an array index");
      }
      if (idx >= node->size()) throw ConfigurationError("override '" + key + "': index out of range");
      node = &(*node)[idx];
    } else {
      if (!node->is_object()) throw ConfigurationError("override '" + key + "' descends into a scalar");
      node = &(*node)[p];
    }
    if (last) *node = value;
  }
}

SimulationConfig make_case_config(const CaseGeometry& g, const std::string& preset) {
  SimulationConfig cfg;
  Domain domain;
  domain.grid_step = preset_grid_step(preset);
  PairLayout layout;
  layout.primary_radius = g.a;
  layout.primary_material = g.primary_material;
  layout.secondary = g.secondary;
  layout.secondary_radius = g.b_d;
  layout.secondary_material = g.secondary_material;
  layout.gap = g.d;
  layout.facet_z = kDeskFacetZ;
  if (g.secondary == SecondaryKind::wire) {
    const double pml = domain.pml_cells * domain.grid_step;
    layout.facet_z = std::max(kDeskFacetZ, pml + kWireClearance + g.d + 2.0 * g.b_d);
  }
  domain.extents.z += layout.facet_z - kDeskFacetZ;
  // Wide primaries: the decomposition needs the monitor to reach 1.5a outside the PML.
  const double pml_um = domain.pml_cells * domain.grid_step;
  const double needed = 2.0 * (kMonitorReach * g.a + pml_um + 2.0 * domain.grid_step);
  if (g.primary_material != "vacuum" && needed > domain.extents.x) {
    domain.extents.x = domain.extents.y = std::ceil(needed * 10.0) / 10.0;
  }

  if (g.primary_material == "vacuum") {
    Scene s;
    s.domain = domain;
    s.materials = {{"silica", silica()}, {"diamond", diamond()}, {"vacuum", vacuum()}};
    s.emitter = Vec3{0.0, 0.0, layout.facet_z - layout.emitter_offset};
    cfg.scene = s;
  } else {
    cfg.scene = make_pair_scene(domain, layout);
  }
  cfg.source.position = *cfg.scene.emitter;
  cfg.source.orientation = g.orientation;
  cfg.run.preset = preset;
  cfg.run.case_id = g.case_id;
  if (g.primary_material != "vacuum") cfg.params.a = g.a;
  if (g.secondary != SecondaryKind::none) {
    cfg.params.b_d = g.b_d;
    cfg.params.d = g.d;
  }
  cfg.monitors.modal = g.primary_material != "vacuum";
  return cfg;
}

namespace {

const double kPRadius[3] = {0.20, 0.43, 0.71};
// Gap at which each case peaked, per radius P1..P3.
const double kCaseGap[4][3] = {{0.21, 0.22, 0.22}, {0.17, 0.17, 0.22}, {0.19, 0.19, 0.23}, {0.13, 0.23, 0.23}};

}  // namespace

std::vector<std::string> builtin_names() {
  std::vector<std::string> out = {"snt_alone_p1", "snt_alone_p2", "snt_alone_p3"};
  for (int c = 1; c <= 4; ++c) {
    for (int p = 1; p <= 3; ++p) out.push_back("case" + std::to_string(c) + "_p" + std::to_string(p));
  }
  out.insert(out.end(), {"case5", "case6", "case7", "vacuum"});
  return out;
}

CaseGeometry builtin_geometry(const std::string& name) {
  CaseGeometry g;
  g.case_id = name;
  if (name == "vacuum") {
    g.primary_material = "vacuum";
    return g;
  }
  if (name.rfind("snt_alone_p", 0) == 0 && name.size() == 12) {
    const int p = name[11] - '1';
    if (p >= 0 && p < 3) {
      g.a = kPRadius[p];
      return g;
    }
  }
  if (name.size() == 8 && name.rfind("case", 0) == 0 && name[5] == '_' && name[6] == 'p') {
    const int c = name[4] - '1', p = name[7] - '1';
    if (c >= 0 && c < 4 && p >= 0 && p < 3) {
      g.a = kPRadius[p];
      g.b_d = g.a;
      g.d = kCaseGap[c][p];
      g.secondary = (c % 2 == 0) ? SecondaryKind::tip : SecondaryKind::wire;
      g.secondary_material = c < 2 ? "silica" : "diamond";
      return g;
    }
  }
  if (name == "case5" || name == "case6" || name == "case7") {
    g.primary_material = "diamond";
    g.a = 0.4;
    if (name == "case5") return g;
    g.secondary_material = "diamond";
    g.b_d = 0.4;
    g.secondary = name == "case6" ? SecondaryKind::tip : SecondaryKind::wire;
    g.d = name == "case6" ? 0.2 : 0.35;
    return g;
  }
  throw ConfigurationError("unknown built-in config '" + name + "'");
}

SimulationConfig builtin_config(const std::string& name, const std::string& preset) {
  return make_case_config(builtin_geometry(name), preset);
}

}  // namespace nanotip
