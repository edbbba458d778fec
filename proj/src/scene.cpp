#include "nanotip/scene.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

namespace nanotip {

Material silica() { return {"silica", 1.457}; }
Material diamond() { return {"diamond", 2.410}; }
Material vacuum() { return {"vacuum", 1.0}; }

AxisDirection AxisDirection::parse(const std::string& text) {
  if (text.size() != 2 || (text[0] != '+' && text[0] != '-')) {
    throw SceneError("axis must be one of +x, -x, +y, -y, +z, -z, got '" + text + "'");
  }
  AxisDirection d;
  d.sign = text[0] == '+' ? 1 : -1;
  switch (text[1]) {
    case 'x': d.axis = Axis::x; break;
    case 'y': d.axis = Axis::y; break;
    case 'z': d.axis = Axis::z; break;
    default: throw SceneError("axis must be one of +x, -x, +y, -y, +z, -z, got '" + text + "'");
  }
  return d;
}

std::string AxisDirection::str() const {
  static constexpr const char* names = "xyz";
  return std::string(sign > 0 ? "+" : "-") + names[index_of(axis)];
}

namespace {

struct LocalCoords {
  double axial;
  double radial;
};

LocalCoords local_coords(const CylinderPrimitive& c, Vec3 p) {
  const int a = index_of(c.axis.axis);
  const Vec3 d = p - c.center;
  double r2 = 0.0;
  for (int b = 0; b < 3; ++b) {
    if (b != a) r2 += d[b] * d[b];
  }
  return {d[a], std::sqrt(r2)};
}

}  // namespace

bool CylinderPrimitive::contains(Vec3 p) const {
  const auto lc = local_coords(*this, p);
  return lc.radial < radius && std::abs(lc.axial) < 0.5 * length;
}

double CylinderPrimitive::signed_distance(Vec3 p) const {
  const auto lc = local_coords(*this, p);
  const double dr = lc.radial - radius;
  const double dh = std::abs(lc.axial) - 0.5 * length;
  if (dr <= 0.0 && dh <= 0.0) return std::max(dr, dh);
  const double er = std::max(dr, 0.0);
  const double eh = std::max(dh, 0.0);
  return std::sqrt(er * er + eh * eh);
}

Vec3 CylinderPrimitive::facet_center(int end_sign) const {
  Vec3 f = center;
  f[index_of(axis.axis)] += end_sign * 0.5 * length;
  return f;
}

std::string to_string(SecondaryKind kind) {
  switch (kind) {
    case SecondaryKind::none: return "none";
    case SecondaryKind::tip: return "tip";
    case SecondaryKind::wire: return "wire";
  }
  return "none";
}

SecondaryKind parse_secondary_kind(const std::string& text) {
  if (text == "none") return SecondaryKind::none;
  if (text == "tip") return SecondaryKind::tip;
  if (text == "wire") return SecondaryKind::wire;
  throw SceneError("secondary kind must be none, tip or wire, got '" + text + "'");
}

std::array<int, 3> Domain::cells() const {
  std::array<int, 3> n{};
  for (int a = 0; a < 3; ++a) n[a] = static_cast<int>(std::lround(extents[a] / grid_step));
  return n;
}

GridGeometry GridGeometry::from_domain(const Domain& domain) {
  const auto n = domain.cells();
  GridGeometry g;
  g.nx = n[0];
  g.ny = n[1];
  g.nz = n[2];
  g.dx = domain.grid_step;
  g.origin = {-0.5 * (g.nx - 1) * g.dx, -0.5 * (g.ny - 1) * g.dx, 0.0};
  return g;
}

const Material& Scene::material_of(const CylinderPrimitive& c) const {
  auto it = materials.find(c.material);
  if (it == materials.end()) throw SceneError("unknown material '" + c.material + "'");
  return it->second;
}

Scene make_pair_scene(const Domain& domain, const PairLayout& layout) {
  Scene scene;
  scene.domain = domain;
  scene.materials = {{"silica", silica()}, {"diamond", diamond()}, {"vacuum", vacuum()}};

  // Tips and wires run one micrometre past the domain so they terminate inside the PML.
  constexpr double overhang = 1.0;
  const double lz = domain.extents.z;

  CylinderPrimitive primary;
  primary.name = "primary";
  primary.axis = {Axis::z, 1};
  primary.radius = layout.primary_radius;
  primary.length = (lz - layout.facet_z) + overhang;
  primary.center = {0.0, 0.0, layout.facet_z + 0.5 * primary.length};
  primary.material = layout.primary_material;
  scene.primitives.push_back(primary);

  PairConfig pair;
  pair.primary = primary;
  pair.secondary_kind = layout.secondary;
  pair.gap_d = layout.gap;

  if (layout.secondary == SecondaryKind::tip) {
    CylinderPrimitive tip;
    tip.name = "secondary";
    tip.axis = {Axis::z, -1};
    tip.radius = layout.secondary_radius;
    const double facet = layout.facet_z - layout.gap;
    tip.length = facet + overhang;
    tip.center = {0.0, 0.0, facet - 0.5 * tip.length};
    tip.material = layout.secondary_material;
    scene.primitives.push_back(tip);
    pair.secondary = tip;
  } else if (layout.secondary == SecondaryKind::wire) {
    CylinderPrimitive wire;
    wire.name = "secondary";
    wire.axis = {Axis::y, 1};
    wire.radius = layout.secondary_radius;
    wire.length = domain.extents.y + 2.0 * overhang;
    wire.center = {0.0, 0.0, layout.facet_z - layout.gap - layout.secondary_radius};
    wire.material = layout.secondary_material;
    scene.primitives.push_back(wire);
    pair.secondary = wire;
  }

  scene.pair = pair;
  scene.emitter = Vec3{0.0, 0.0, layout.facet_z - layout.emitter_offset};
  return scene;
}

namespace {

struct Interval {
  double lo, hi;
};

Interval extent_along(const CylinderPrimitive& c, int axis) {
  if (axis == index_of(c.axis.axis)) {
    return {c.center[axis] - 0.5 * c.length, c.center[axis] + 0.5 * c.length};
  }
  return {c.center[axis] - c.radius, c.center[axis] + c.radius};
}

bool open_overlap(Interval a, Interval b) { return a.lo < b.hi && b.lo < a.hi; }

// Exact for parallel axes; perpendicular axes are resolved by a dense scan along
// the third axis, where each slice reduces to two independent interval tests.
bool cylinders_overlap(const CylinderPrimitive& a, const CylinderPrimitive& b) {
  for (int ax = 0; ax < 3; ++ax) {
    if (!open_overlap(extent_along(a, ax), extent_along(b, ax))) return false;
  }
  const int aa = index_of(a.axis.axis);
  const int ba = index_of(b.axis.axis);
  if (aa == ba) {
    double d2 = 0.0;
    for (int k = 0; k < 3; ++k) {
      if (k != aa) d2 += (a.center[k] - b.center[k]) * (a.center[k] - b.center[k]);
    }
    return std::sqrt(d2) < a.radius + b.radius;
  }
  const int third = 3 - aa - ba;
  const Interval ia = extent_along(a, third);
  const Interval ib = extent_along(b, third);
  const double lo = std::max(ia.lo, ib.lo);
  const double hi = std::min(ia.hi, ib.hi);
  constexpr int samples = 4096;
  for (int s = 0; s <= samples; ++s) {
    const double t = lo + (hi - lo) * (s + 0.5) / (samples + 1);
    const double da = t - a.center[third];
    const double db = t - b.center[third];
    const double ha = a.radius * a.radius - da * da;
    const double hb = b.radius * b.radius - db * db;
    if (ha <= 0.0 || hb <= 0.0) continue;
    // a's cross-section half-width along b's axis and vice versa.
    const Interval a_on_ba{a.center[ba] - std::sqrt(ha), a.center[ba] + std::sqrt(ha)};
    const Interval b_on_aa{b.center[aa] - std::sqrt(hb), b.center[aa] + std::sqrt(hb)};
    if (open_overlap(a_on_ba, extent_along(b, ba)) && open_overlap(b_on_aa, extent_along(a, aa))) {
      return true;
    }
  }
  return false;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

bool in_domain(const Domain& d, Vec3 p) {
  return std::abs(p.x) <= 0.5 * d.extents.x && std::abs(p.y) <= 0.5 * d.extents.y && p.z >= 0.0 &&
         p.z <= d.extents.z;
}

}  // namespace

std::vector<Violation> validate_scene(const Scene& scene) {
  std::vector<Violation> out;
  const Domain& d = scene.domain;

  for (int a = 0; a < 3; ++a) {
    if (!(d.extents[a] > 0.0)) out.push_back({"domain", "extent along axis " + std::to_string(a) + " must be positive"});
  }
  if (!(d.grid_step > 0.0)) out.push_back({"domain", "grid_step must be positive"});
  if (d.pml_cells < 8) out.push_back({"domain", "pml_cells must be >= 8, got " + std::to_string(d.pml_cells)});
  if (d.grid_step > 0.0) {
    const auto n = d.cells();
    for (int a = 0; a < 3; ++a) {
      if (n[a] < 2 * d.pml_cells + 10) {
        out.push_back({"domain", "axis " + std::to_string(a) + " has " + std::to_string(n[a]) +
                                     " cells, needs at least 2*pml_cells+10"});
      }
    }
  }

  for (const auto& [name, m] : scene.materials) {
    if (!(m.refractive_index >= 1.0)) {
      out.push_back({"material " + name, "refractive_index must be >= 1, got " + fmt(m.refractive_index)});
    }
  }
  if (!(scene.background_index >= 1.0)) out.push_back({"background", "refractive index must be >= 1"});

  bool primitives_ok = true;
  for (const auto& c : scene.primitives) {
    const std::string subject = "primitive " + c.name;
    if (!(c.radius > 0.0)) {
      out.push_back({subject, "radius must be positive, got " + fmt(c.radius)});
      primitives_ok = false;
    }
    if (!(c.length > 0.0)) {
      out.push_back({subject, "length must be positive, got " + fmt(c.length)});
      primitives_ok = false;
    }
    if (!scene.materials.contains(c.material)) {
      out.push_back({subject, "unknown material '" + c.material + "'"});
    }
  }
  if (primitives_ok) {
    for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
      for (std::size_t j = i + 1; j < scene.primitives.size(); ++j) {
        if (cylinders_overlap(scene.primitives[i], scene.primitives[j])) {
          out.push_back({"primitive " + scene.primitives[i].name,
                         "overlaps primitive " + scene.primitives[j].name});
        }
      }
    }
  }

  if (scene.emitter) {
    const Vec3 e = *scene.emitter;
    if (!in_domain(d, e)) {
      out.push_back({"emitter", "position lies outside the domain"});
    } else if (d.grid_step > 0.0) {
      const auto g = GridGeometry::from_domain(d);
      for (int a = 0; a < 3; ++a) {
        const double idx = g.index_of(a, e[a]);
        if (idx < d.pml_cells || idx > g.n(a) - 1 - d.pml_cells) {
          out.push_back({"emitter", "position lies inside the PML"});
          break;
        }
      }
    }
    if (primitives_ok) {
      for (const auto& c : scene.primitives) {
        const double sd = c.signed_distance(e);
        if (sd < kEmitterClearance - 1e-9) {
          out.push_back({"emitter", "must sit in vacuum at least 10 nm from " + c.name + " (distance " +
                                        fmt(sd) + " um)"});
        }
      }
    }
  }

  if (scene.pair) {
    const PairConfig& p = *scene.pair;
    if (!(p.gap_d >= 0.0)) out.push_back({"pair", "gap_d must be >= 0, got " + fmt(p.gap_d)});
    if (scene.emitter && p.primary.radius > 0.0) {
      const int a = index_of(p.primary.axis.axis);
      // The facet facing the emitter is the one at the primary's low end (it extends along +axis).
      const Vec3 facet = p.primary.facet_center(-p.primary.axis.sign);
      const double along = ((*scene.emitter)[a] - facet[a]) * -p.primary.axis.sign;
      if (!(along > 0.0 && (p.secondary_kind == SecondaryKind::none || along < p.gap_d))) {
        out.push_back({"emitter", "must lie inside the gap in front of the primary facet"});
      }
    }
  }
  return out;
}

namespace {

double local_permittivity(const Scene& scene, Vec3 p, double background_eps) {
  const CylinderPrimitive* best = nullptr;
  for (const auto& c : scene.primitives) {
    if (c.contains(p) && (best == nullptr || c.radius <= best->radius)) best = &c;
  }
  return best ? scene.material_of(*best).permittivity() : background_eps;
}

}  // namespace

double permittivity_at(const Scene& scene, Vec3 point) {
  if (!in_domain(scene.domain, point)) {
    throw SceneError("point (" + fmt(point.x) + ", " + fmt(point.y) + ", " + fmt(point.z) +
                     ") lies outside the domain");
  }
  return local_permittivity(scene, point, scene.background_index * scene.background_index);
}

PermittivityGrid::PermittivityGrid(const GridGeometry& geometry, float fill) : geometry_(geometry) {
  sy_ = static_cast<std::size_t>(geometry.nx + 2);
  sz_ = sy_ * static_cast<std::size_t>(geometry.ny + 2);
  size_ = sz_ * static_cast<std::size_t>(geometry.nz + 2);
  for (auto& d : data_) d.assign(size_, fill);
}

Vec3 PermittivityGrid::edge_position(int component, int i, int j, int k) const {
  Vec3 p{geometry_.coord(0, i), geometry_.coord(1, j), geometry_.coord(2, k)};
  p[component] += 0.5 * geometry_.dx;
  return p;
}

PermittivityGrid rasterize(const Scene& scene, const RasterOptions& options) {
  const auto g = GridGeometry::from_domain(scene.domain);
  for (const auto& c : scene.primitives) {
    if (c.radius < 2.0 * g.dx) {
      throw SceneError("grid too coarse: primitive " + c.name + " radius " + fmt(c.radius) +
                       " um is below two grid steps (" + fmt(2.0 * g.dx) + " um)");
    }
  }
  const double bg = scene.background_index * scene.background_index;
  PermittivityGrid grid(g, static_cast<float>(bg));

  const double half_diag = 0.5 * std::sqrt(3.0) * g.dx;
  const int ns = std::max(1, options.subsamples);

  auto fill_slab = [&](int k0, int k1) {
    std::vector<const CylinderPrimitive*> near;
    for (int comp = 0; comp < 3; ++comp) {
      for (int k = k0; k < k1; ++k) {
        for (int j = 0; j < g.ny; ++j) {
          for (int i = 0; i < g.nx; ++i) {
            const Vec3 p = grid.edge_position(comp, i, j, k);
            bool straddles = false;
            for (const auto& c : scene.primitives) {
              if (std::abs(c.signed_distance(p)) <= half_diag) {
                straddles = true;
                break;
              }
            }
            double eps;
            if (!straddles) {
              eps = local_permittivity(scene, p, bg);
            } else {
              double sum = 0.0;
              for (int a = 0; a < ns; ++a) {
                for (int b = 0; b < ns; ++b) {
                  for (int c = 0; c < ns; ++c) {
                    const Vec3 q{p.x + ((a + 0.5) / ns - 0.5) * g.dx, p.y + ((b + 0.5) / ns - 0.5) * g.dx,
                                 p.z + ((c + 0.5) / ns - 0.5) * g.dx};
                    sum += local_permittivity(scene, q, bg);
                  }
                }
              }
              eps = sum / (ns * ns * ns);
            }
            grid.eps(comp, i, j, k) = static_cast<float>(eps);
          }
        }
      }
    }
  };

  const int threads = std::clamp(options.threads, 1, g.nz);
  if (threads == 1) {
    fill_slab(0, g.nz);
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) {
      const int k0 = g.nz * t / threads;
      const int k1 = g.nz * (t + 1) / threads;
      pool.emplace_back(fill_slab, k0, k1);
    }
  }
  return grid;
}

}  // namespace nanotip
