#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nanotip/units.hpp"

namespace nanotip {

struct SceneError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Lossless, non-magnetic, non-dispersive dielectric.
struct Material {
  std::string name;
  double refractive_index = 1.0;

  double permittivity() const { return refractive_index * refractive_index; }
};

/// Indices at 620 nm; the simulation is single-frequency.
Material silica();
Material diamond();
Material vacuum();

/// Axis-aligned direction: one of +-x, +-y, +-z.
struct AxisDirection {
  Axis axis = Axis::z;
  int sign = 1;

  static AxisDirection parse(const std::string& text);
  std::string str() const;
  friend bool operator==(const AxisDirection&, const AxisDirection&) = default;
};

/// Flat-ended circular cylinder. `center` is the midpoint of the axis segment.
struct CylinderPrimitive {
  std::string name;
  AxisDirection axis;
  Vec3 center;
  double radius = 0.0;
  double length = 0.0;
  std::string material;

  bool contains(Vec3 p) const;
  /// Negative inside, positive outside; exact Euclidean distance to the surface.
  double signed_distance(Vec3 p) const;
  /// Centre of the flat end that faces `toward` along the axis.
  Vec3 facet_center(int end_sign) const;
};

enum class SecondaryKind { none, tip, wire };

std::string to_string(SecondaryKind kind);
SecondaryKind parse_secondary_kind(const std::string& text);

struct PairConfig {
  CylinderPrimitive primary;
  std::optional<CylinderPrimitive> secondary;
  SecondaryKind secondary_kind = SecondaryKind::none;
  double gap_d = 0.0;
};

struct Domain {
  Vec3 extents{3.0, 3.0, 8.0};
  double grid_step = 0.025;
  int pml_cells = 10;

  std::array<int, 3> cells() const;
};

/// Node layout of a Domain: x and y are centred on the origin, z starts at 0.
/// Node (i,j,k) sits at origin + (i,j,k)*dx; edges and faces at half offsets.
struct GridGeometry {
  int nx = 0, ny = 0, nz = 0;
  double dx = 0.0;
  Vec3 origin;

  static GridGeometry from_domain(const Domain& domain);

  int n(int axis) const { return axis == 0 ? nx : (axis == 1 ? ny : nz); }
  double coord(int axis, double index) const { return origin[axis] + index * dx; }
  double index_of(int axis, double coordinate) const { return (coordinate - origin[axis]) / dx; }
  std::size_t cell_count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
  }
};

struct Scene {
  Domain domain;
  std::map<std::string, Material> materials;
  std::vector<CylinderPrimitive> primitives;
  std::optional<PairConfig> pair;
  std::optional<Vec3> emitter;
  double background_index = 1.0;

  const Material& material_of(const CylinderPrimitive& c) const;
};

/// Layout rules for a primary nanotip along +z with an optional partner:
/// a coaxial tip facing it facet-to-facet, or a wire along y centred on the axis.
struct PairLayout {
  double primary_radius = 0.43;
  std::string primary_material = "silica";
  SecondaryKind secondary = SecondaryKind::none;
  double secondary_radius = 0.43;
  std::string secondary_material = "silica";
  double gap = 0.0;
  double facet_z = 2.0;
  double emitter_offset = 0.010;
};

Scene make_pair_scene(const Domain& domain, const PairLayout& layout);

struct Violation {
  std::string subject;
  std::string message;
};

inline constexpr double kEmitterClearance = 0.010;

std::vector<Violation> validate_scene(const Scene& scene);

/// Relative permittivity at a point; throws SceneError outside the domain.
double permittivity_at(const Scene& scene, Vec3 point);

/// Permittivity sampled on the three staggered electric-field edge families,
/// stored with one ghost layer on every side.
class PermittivityGrid {
 public:
  PermittivityGrid() = default;
  explicit PermittivityGrid(const GridGeometry& geometry, float fill = 1.0f);

  const GridGeometry& geometry() const { return geometry_; }
  std::size_t stride_y() const { return sy_; }
  std::size_t stride_z() const { return sz_; }
  std::size_t padded_size() const { return size_; }
  std::size_t at(int i, int j, int k) const {
    return static_cast<std::size_t>(i + 1) + static_cast<std::size_t>(j + 1) * sy_ +
           static_cast<std::size_t>(k + 1) * sz_;
  }

  float eps(int component, int i, int j, int k) const { return data_[component][at(i, j, k)]; }
  float& eps(int component, int i, int j, int k) { return data_[component][at(i, j, k)]; }
  const std::vector<float>& component(int c) const { return data_[c]; }
  std::vector<float>& component(int c) { return data_[c]; }

  /// Physical position of the edge (component c, i, j, k).
  Vec3 edge_position(int component, int i, int j, int k) const;

 private:
  GridGeometry geometry_;
  std::size_t sy_ = 0, sz_ = 0, size_ = 0;
  std::array<std::vector<float>, 3> data_;
};

struct RasterOptions {
  int subsamples = 4;
  int threads = 1;
};

/// Throws SceneError when a primitive is thinner than two grid steps.
PermittivityGrid rasterize(const Scene& scene, const RasterOptions& options = {});

}  // namespace nanotip
