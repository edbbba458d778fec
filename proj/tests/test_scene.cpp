#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "nanotip/scene.hpp"

using namespace nanotip;

namespace {

// Malitson fit for fused silica, lambda in um.
double silica_sellmeier(double l) {
  const double l2 = l * l;
  return std::sqrt(1.0 + 0.6961663 * l2 / (l2 - 0.0684043 * 0.0684043) +
                   0.4079426 * l2 / (l2 - 0.1162414 * 0.1162414) + 0.8974794 * l2 / (l2 - 9.896161 * 9.896161));
}

// Two-term fit for diamond (Peter), lambda in um.
double diamond_sellmeier(double l) {
  const double l2 = l * l;
  return std::sqrt(1.0 + 0.3306 * l2 / (l2 - 0.175 * 0.175) + 4.3356 * l2 / (l2 - 0.106 * 0.106));
}

Domain small_domain() {
  Domain d;
  d.extents = {2.0, 2.0, 4.0};
  d.grid_step = 0.05;
  d.pml_cells = 8;
  return d;
}

Scene tip_scene(double radius = 0.43) {
  PairLayout l;
  l.primary_radius = radius;
  return make_pair_scene(Domain{}, l);
}

bool has_subject(const std::vector<Violation>& v, const std::string& s) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.subject.find(s) != std::string::npos; });
}

}  // namespace

TEST(Material, IndicesMatchDispersionFormulas) {
  EXPECT_NEAR(silica().refractive_index, silica_sellmeier(0.62), 1e-3);
  // Published diamond fits spread by a few parts in 1e3 around 2.41 here.
  EXPECT_NEAR(diamond().refractive_index, diamond_sellmeier(0.62), 5e-3);
  EXPECT_NEAR(silica().permittivity(), 2.123, 1e-3);
  EXPECT_NEAR(diamond().permittivity(), 5.808, 1e-3);
  EXPECT_EQ(vacuum().permittivity(), 1.0);
}

TEST(Cylinder, SignedDistanceAndContainment) {
  CylinderPrimitive c{"c", AxisDirection{Axis::z, 1}, {0, 0, 1}, 0.5, 2.0, "silica"};
  EXPECT_TRUE(c.contains({0, 0, 1}));
  EXPECT_FALSE(c.contains({0.6, 0, 1}));
  EXPECT_NEAR(c.signed_distance({0, 0, 1}), -0.5, 1e-12);
  EXPECT_NEAR(c.signed_distance({0.8, 0, 1}), 0.3, 1e-12);
  EXPECT_NEAR(c.signed_distance({0, 0, 2.25}), 0.25, 1e-12);
  // Beyond the rim: distance to the circular edge.
  EXPECT_NEAR(c.signed_distance({0.8, 0, 2.4}), 0.5, 1e-12);
  EXPECT_NEAR(c.facet_center(-1).z, 0.0, 1e-12);
  EXPECT_NEAR(c.facet_center(+1).z, 2.0, 1e-12);
}

TEST(AxisDirection, ParseRoundTrip) {
  for (const char* s : {"+x", "-x", "+y", "-y", "+z", "-z"}) EXPECT_EQ(AxisDirection::parse(s).str(), s);
  EXPECT_THROW(AxisDirection::parse("w"), SceneError);
}

TEST(ValidateScene, DeskTipIsValid) { EXPECT_TRUE(validate_scene(tip_scene()).empty()); }

TEST(ValidateScene, ZeroRadiusNamesPrimitive) {
  Scene s = tip_scene();
  s.primitives[0].radius = 0.0;
  const auto v = validate_scene(s);
  ASSERT_FALSE(v.empty());
  EXPECT_TRUE(has_subject(v, s.primitives[0].name));
}

TEST(ValidateScene, SmallGapPairIsValidAndDipoleInsideGap) {
  PairLayout l;
  l.secondary = SecondaryKind::tip;
  l.gap = 0.05;
  const Scene s = make_pair_scene(Domain{}, l);
  EXPECT_TRUE(validate_scene(s).empty());
  // Brute-force containment: the emitter sits between the two facets and in no primitive.
  ASSERT_TRUE(s.emitter && s.pair && s.pair->secondary);
  const Vec3 e = *s.emitter;
  for (const auto& p : s.primitives) EXPECT_FALSE(p.contains(e));
  const double z_primary = s.pair->primary.facet_center(-1).z;
  const double z_secondary = s.pair->secondary->facet_center(+1).z;
  EXPECT_NEAR(z_primary - z_secondary, 0.05, 1e-12);
  EXPECT_GT(e.z, z_secondary);
  EXPECT_LT(e.z, z_primary);
  EXPECT_NEAR(z_primary - e.z, 0.010, 1e-12);
}

TEST(ValidateScene, WireGapIsSurfaceToSurface) {
  PairLayout l;
  l.secondary = SecondaryKind::wire;
  l.secondary_radius = 0.3;
  l.gap = 0.2;
  const Scene s = make_pair_scene(Domain{}, l);
  EXPECT_TRUE(validate_scene(s).empty());
  const auto& w = *s.pair->secondary;
  EXPECT_EQ(w.axis.axis, Axis::y);
  const double facet = s.pair->primary.facet_center(-1).z;
  EXPECT_NEAR(facet - (w.center.z + w.radius), 0.2, 1e-12);
  EXPECT_GT(w.length, s.domain.extents.y);
}

TEST(ValidateScene, DipoleTooCloseOrInsideIsRejected) {
  Scene s = tip_scene();
  s.emitter = Vec3{0, 0, s.pair->primary.facet_center(-1).z + 0.05};
  EXPECT_TRUE(has_subject(validate_scene(s), "emitter"));
  s.emitter = Vec3{0, 0, s.pair->primary.facet_center(-1).z - 0.005};
  EXPECT_TRUE(has_subject(validate_scene(s), "emitter"));
}

TEST(ValidateScene, OverlapAndDomainChecks) {
  PairLayout l;
  l.secondary = SecondaryKind::tip;
  l.gap = 0.0;
  Scene s = make_pair_scene(Domain{}, l);
  s.pair->secondary->center.z += 0.1;
  s.primitives[1].center.z += 0.1;
  EXPECT_FALSE(validate_scene(s).empty());

  Scene d = tip_scene();
  d.domain.pml_cells = 4;
  EXPECT_TRUE(has_subject(validate_scene(d), "domain"));
  d = tip_scene();
  d.domain.extents.x = 0.4;
  EXPECT_TRUE(has_subject(validate_scene(d), "domain"));
}

TEST(Permittivity, PointQueries) {
  const Scene s = tip_scene();
  const double facet = s.pair->primary.facet_center(-1).z;
  EXPECT_NEAR(permittivity_at(s, {0, 0, facet + 5.0}), 2.123, 1e-3);
  EXPECT_EQ(permittivity_at(s, {1.0, 1.0, 0.5}), 1.0);
  PairLayout l;
  l.primary_material = "diamond";
  l.primary_radius = 0.4;
  const Scene dia = make_pair_scene(Domain{}, l);
  EXPECT_NEAR(permittivity_at(dia, {0.1, 0, facet + 1.0}), 5.808, 1e-3);
  EXPECT_THROW(permittivity_at(s, {5.0, 0, 1.0}), SceneError);
}

TEST(Permittivity, TranslationInvariance) {
  Scene a = tip_scene();
  Scene b = a;
  const Vec3 shift{0.2, -0.15, 0.3};
  for (auto& p : b.primitives) p.center = p.center + shift;
  for (double x : {-0.5, -0.2, 0.0, 0.3, 0.44}) {
    for (double z : {1.0, 2.0, 2.5, 4.0}) {
      const Vec3 p{x, 0.1, z};
      EXPECT_EQ(permittivity_at(a, p), permittivity_at(b, p + shift));
    }
  }
}

TEST(Rasterize, VacuumIsUniform) {
  Scene s;
  s.domain = small_domain();
  const auto g = rasterize(s);
  const auto& geo = g.geometry();
  for (int c = 0; c < 3; ++c) {
    for (int k = 0; k < geo.nz; k += 7) {
      for (int j = 0; j < geo.ny; ++j) {
        for (int i = 0; i < geo.nx; ++i) ASSERT_EQ(g.eps(c, i, j, k), 1.0f);
      }
    }
  }
}

TEST(Rasterize, InteriorExactBoundaryBetweenAndBounded) {
  Scene s;
  s.domain = small_domain();
  s.materials = {{"silica", silica()}};
  s.primitives.push_back({"rod", AxisDirection{Axis::z, 1}, {0, 0, 2.0}, 0.43, 6.0, "silica"});
  const auto g = rasterize(s);
  const auto& geo = g.geometry();
  const float eps_si = static_cast<float>(silica().permittivity());
  int between = 0;
  for (int c = 0; c < 3; ++c) {
    for (int k = 10; k < geo.nz - 10; k += 5) {
      for (int j = 0; j < geo.ny; ++j) {
        for (int i = 0; i < geo.nx; ++i) {
          const float e = g.eps(c, i, j, k);
          ASSERT_GE(e, 1.0f);
          ASSERT_LE(e, eps_si);
          const Vec3 p = g.edge_position(c, i, j, k);
          const double d = s.primitives[0].signed_distance(p);
          if (d < -geo.dx) {
            ASSERT_FLOAT_EQ(e, eps_si);
          } else if (d > geo.dx) {
            ASSERT_FLOAT_EQ(e, 1.0f);
          } else if (e > 1.0f && e < eps_si) {
            ++between;
          }
        }
      }
    }
  }
  EXPECT_GT(between, 0);
}

TEST(Rasterize, RefinementOnlyChangesBoundaryCells) {
  Scene coarse;
  coarse.domain = small_domain();
  coarse.materials = {{"silica", silica()}};
  coarse.primitives.push_back({"rod", AxisDirection{Axis::z, 1}, {0, 0, 2.0}, 0.43, 6.0, "silica"});
  Scene fine = coarse;
  fine.domain.grid_step = coarse.domain.grid_step / 2;
  fine.domain.pml_cells = 16;
  const auto gc = rasterize(coarse), gf = rasterize(fine);
  const double dxc = coarse.domain.grid_step;
  // Compare at coarse edge positions, which are also fine-grid edge positions for x-edges
  // offset by a quarter cell; use the analytic distance to classify.
  for (int k = 20; k < gf.geometry().nz - 20; k += 9) {
    for (int j = 0; j < gf.geometry().ny; ++j) {
      for (int i = 0; i < gf.geometry().nx; ++i) {
        const Vec3 p = gf.edge_position(2, i, j, k);
        if (std::abs(coarse.primitives[0].signed_distance(p)) > dxc) {
          const float expect = coarse.primitives[0].contains(p) ? static_cast<float>(silica().permittivity()) : 1.0f;
          ASSERT_FLOAT_EQ(gf.eps(2, i, j, k), expect);
        }
      }
    }
  }
  (void)gc;
}

TEST(Rasterize, QuarterTurnSymmetry) {
  Scene s;
  s.domain = small_domain();
  s.materials = {{"silica", silica()}};
  s.primitives.push_back({"rod", AxisDirection{Axis::z, 1}, {0, 0, 2.0}, 0.43, 6.0, "silica"});
  const auto g = rasterize(s);
  const auto& geo = g.geometry();
  ASSERT_EQ(geo.nx, geo.ny);
  // (x, y) -> (-y, x): Ez edges map onto Ez edges, Ex onto Ey.
  for (int k = 12; k < geo.nz - 12; k += 11) {
    for (int j = 0; j < geo.ny; ++j) {
      for (int i = 0; i < geo.nx; ++i) {
        ASSERT_FLOAT_EQ(g.eps(2, i, j, k), g.eps(2, geo.nx - 1 - j, i, k));
        if (i < geo.nx - 1) ASSERT_FLOAT_EQ(g.eps(0, i, j, k), g.eps(1, geo.nx - 1 - j, i, k));
      }
    }
  }
}

TEST(Rasterize, TooCoarseGridThrows) {
  Scene s;
  s.domain = small_domain();
  s.materials = {{"silica", silica()}};
  s.primitives.push_back({"thin", AxisDirection{Axis::z, 1}, {0, 0, 2.0}, 0.06, 6.0, "silica"});
  EXPECT_THROW(rasterize(s), SceneError);
}

TEST(Rasterize, ThreadCountDoesNotChangeGrid) {
  Scene s;
  s.domain = small_domain();
  s.materials = {{"diamond", diamond()}};
  s.primitives.push_back({"rod", AxisDirection{Axis::z, 1}, {0, 0, 2.0}, 0.4, 6.0, "diamond"});
  RasterOptions one, four;
  four.threads = 4;
  const auto a = rasterize(s, one), b = rasterize(s, four);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(a.component(c), b.component(c));
}
