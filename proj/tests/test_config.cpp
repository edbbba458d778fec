#include <gtest/gtest.h>

#include <cmath>

#include "nanotip/config.hpp"
#include "nanotip/simulation.hpp"

using namespace nanotip;

TEST(Config, Presets) {
  EXPECT_DOUBLE_EQ(preset_grid_step("coarse"), 0.025);
  EXPECT_DOUBLE_EQ(preset_grid_step("medium"), 0.015);
  EXPECT_DOUBLE_EQ(preset_grid_step("fine"), 0.010);
  EXPECT_THROW(preset_grid_step("ultra"), ConfigurationError);
  EXPECT_EQ(preset_names().size(), 3u);
}

TEST(Config, BuiltinsRoundTripAndValidate) {
  for (const auto& name : builtin_names()) {
    SCOPED_TRACE(name);
    const auto cfg = builtin_config(name);
    const auto doc = to_json(cfg);
    EXPECT_EQ(to_json(parse_config(doc)), doc);
    EXPECT_TRUE(validate_scene(cfg.scene).empty());
    EXPECT_NO_THROW(plan_run(cfg));
  }
}

TEST(Config, UnknownKeyIsNamed) {
  auto doc = to_json(builtin_config("snt_alone_p2"));
  doc["primitives"][0]["radiuss"] = 0.4;
  try {
    parse_config(doc);
    FAIL() << "expected a configuration error";
  } catch (const ConfigurationError& e) {
    EXPECT_NE(std::string(e.what()).find("radiuss"), std::string::npos) << e.what();
  }
  auto top = to_json(builtin_config("vacuum"));
  top["extra"] = 1;
  EXPECT_THROW(parse_config(top), ConfigurationError);
}

TEST(Config, RangeChecks) {
  auto doc = to_json(builtin_config("snt_alone_p2"));
  auto bad = doc;
  bad["run"]["courant"] = 1.2;
  EXPECT_THROW(parse_config(bad), ConfigurationError);
  bad = doc;
  bad["source"]["wavelength"] = 0.0;
  EXPECT_THROW(parse_config(bad), ConfigurationError);
  bad = doc;
  bad["primitives"][0]["material"] = "unobtainium";
  EXPECT_THROW(parse_config(bad), ConfigurationError);
  bad = doc;
  bad["source"]["orientation"] = "sideways";
  EXPECT_THROW(parse_config(bad), ConfigurationError);
}

TEST(Config, Overrides) {
  auto doc = to_json(builtin_config("snt_alone_p2"));
  apply_override(doc, "primitives.0.radius=0.5");
  EXPECT_DOUBLE_EQ(doc["primitives"][0]["radius"].get<double>(), 0.5);
  apply_override(doc, "run.case=my_case");
  EXPECT_EQ(doc["run"]["case"], "my_case");
  apply_override(doc, "domain.extents=[2,2,6]");
  EXPECT_EQ(doc["domain"]["extents"], (nlohmann::json{2, 2, 6}));
  EXPECT_EQ(parse_config(doc).scene.primitives[0].radius, 0.5);
  EXPECT_THROW(apply_override(doc, "no_equals_sign"), ConfigurationError);
  EXPECT_THROW(apply_override(doc, "primitives.7.radius=1"), ConfigurationError);
  EXPECT_THROW(apply_override(doc, "primitives.x.radius=1"), ConfigurationError);
  EXPECT_THROW(apply_override(doc, "domain.grid_step.sub=1"), ConfigurationError);
}

TEST(Config, CaseLayout) {
  CaseGeometry g;
  g.secondary = SecondaryKind::wire;
  g.secondary_material = "diamond";
  g.a = 0.43;
  g.b_d = 0.6;
  g.d = 0.23;
  const auto cfg = make_case_config(g, "coarse");
  ASSERT_TRUE(cfg.scene.pair.has_value());
  const auto& pair = *cfg.scene.pair;
  ASSERT_TRUE(pair.secondary.has_value());
  const double facet = pair.primary.facet_center(-1).z;
  EXPECT_NEAR(cfg.source.position.z, facet - 0.010, 1e-12);
  // Wire surface sits the gap below the tip facet.
  EXPECT_NEAR(facet - (pair.secondary->center.z + pair.secondary->radius), 0.23, 1e-12);
  EXPECT_EQ(pair.secondary->axis.axis, Axis::y);
  EXPECT_EQ(cfg.params.d, 0.23);
  EXPECT_DOUBLE_EQ(cfg.scene.domain.grid_step, 0.025);
}

TEST(Config, WideTipsWidenTheDomain) {
  CaseGeometry g;
  g.a = 0.43;
  EXPECT_DOUBLE_EQ(make_case_config(g, "coarse").scene.domain.extents.x, 3.0);
  g.a = 1.24;
  const auto wide = make_case_config(g, "coarse");
  // The monitor must span 1.5a plus the PML on each side.
  const double need = 2 * (1.5 * g.a + 10 * 0.025);
  EXPECT_GE(wide.scene.domain.extents.x, need);
  EXPECT_EQ(wide.scene.domain.extents.x, wide.scene.domain.extents.y);
  EXPECT_NO_THROW(plan_run(wide));
}

TEST(Config, PlanMatchesGrid) {
  const auto plan = plan_run(builtin_config("snt_alone_p2"));
  EXPECT_EQ(plan.steps_per_period, 44);
  EXPECT_LE(plan.dt_fs, plan.courant_limit_fs);
  EXPECT_EQ(plan.geometry.nx, 120);  // one node per cell of the 3 um box
  EXPECT_EQ(plan.max_steps, 400L * 44);
  EXPECT_GT(plan.memory_bytes, 0.0);
  // Monitor 5 um above the emitter at z = 1.99.
  EXPECT_NEAR(plan.geometry.coord(2, plan.monitor_plane), 6.99, 0.0125 + 1e-9);
}
