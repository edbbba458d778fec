#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "nanotip/report.hpp"

using namespace nanotip;
namespace fs = std::filesystem;

namespace {

struct TempRoot {
  fs::path path;
  TempRoot() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("nanotip_report_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempRoot() { fs::remove_all(path); }
};

// eta rises with the axis value until `peak`, then falls.
RunFunction tent(double peak, double top) {
  return [=](const RunDescriptor& r, const SweepSpec& s, int) {
    CouplingReport rep;
    rep.key.case_id = r.geometry.case_id;
    rep.key.a = r.geometry.a;
    rep.key.d = r.geometry.d;
    rep.key.b_d = r.geometry.b_d;
    rep.key.orientation = r.orientation;
    rep.key.preset = s.preset;
    rep.eta_flux = top - std::abs(r.axis_value - peak) - (r.orientation == Orientation::radial ? 0.0 : 0.1);
    rep.eta_modal = rep.eta_flux - 0.02;
    rep.p_total = 1.0;
    rep.converged = true;
    return rep;
  };
}

void store(const TempRoot& root, const std::string& name, SweepSpec spec, const RunFunction& run) {
  execute(spec, (root.path / name).string(), {}, run);
}

SweepSpec with_values(SweepSpec s, std::vector<double> values) {
  s.values = std::move(values);
  return s;
}

}  // namespace

TEST(Figures, Catalogue) {
  EXPECT_EQ(figure_defs().size(), 12u);
  EXPECT_EQ(figure_def("fig4a").groups.size(), 1u);
  EXPECT_EQ(figure_def("fig4a").groups[0].axis, SweepAxis::a);
  EXPECT_EQ(figure_def("fig2c").groups.size(), 2u);
  EXPECT_THROW(figure_def("fig9z"), ConfigurationError);
  for (const auto& f : figure_defs()) {
    for (const auto& g : f.groups) {
      SCOPED_TRACE(f.id);
      const auto id = builtin_sweep_for(g);
      const auto spec = builtin_sweep(id);
      EXPECT_EQ(spec.base.case_id, g.case_id);
      EXPECT_EQ(spec.axis, g.axis);
    }
  }
}

TEST(Figures, MissingSweepsAreNamed) {
  TempRoot root;
  try {
    figure_rows(scan_results(root.path.string()), figure_def("fig2c"), "coarse");
    FAIL() << "expected MissingInputs";
  } catch (const MissingInputs& e) {
    EXPECT_EQ(e.needed, (std::vector<std::string>{"case1_p2_d", "case2_p2_d"}));
  }
}

TEST(Figures, RowsFromStoredSweepsAndCsvRoundTrip) {
  TempRoot root;
  store(root, "anything", with_values(builtin_sweep("case5_a"), {0.124, 0.31, 0.434}), tent(0.31, 0.9));
  // Same case at another preset must not leak in.
  store(root, "other_preset", with_values(builtin_sweep("case5_a", "medium"), {0.31}), tent(0.31, 0.5));
  const auto sweeps = scan_results(root.path.string());
  ASSERT_EQ(sweeps.size(), 2u);
  const auto rows = figure_rows(sweeps, figure_def("fig4a"), "coarse");
  // Three radii, radial and axial each.
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].case_id, "case5");
  EXPECT_DOUBLE_EQ(rows[2].axis_value, 0.31);
  EXPECT_EQ(rows[2].orientation, Orientation::radial);
  EXPECT_NEAR(rows[2].eta, 0.9, 1e-12);
  EXPECT_EQ(rows[3].orientation, Orientation::axial);
  EXPECT_TRUE(rows[5].converged);

  const auto csv = figure_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "case,axis_value_um,orientation,eta,eta_modal,converged");
  const auto back = parse_figure_csv(csv);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].case_id, rows[i].case_id);
    EXPECT_NEAR(back[i].axis_value, rows[i].axis_value, 1e-9);
    EXPECT_NEAR(back[i].eta, rows[i].eta, 1e-6);
    EXPECT_EQ(back[i].orientation, rows[i].orientation);
  }
}

TEST(Figures, UnreadableResultsAreReportedNotThrown) {
  TempRoot root;
  fs::create_directories(root.path / "broken");
  std::ofstream(root.path / "broken" / "results.jsonl") << "garbage\n{\n";
  std::vector<std::string> errors;
  const auto sweeps = scan_results(root.path.string(), &errors);
  EXPECT_TRUE(sweeps.empty());
  EXPECT_EQ(errors.size(), 1u);
}

TEST(Summary, BestRadialPointPerSweep) {
  TempRoot root;
  store(root, "snt", builtin_sweep("snt_alone"), tent(0.43, 0.44));
  store(root, "c4p2", with_values(builtin_sweep("case4_p2_d"), {0.15, 0.23, 0.31}), tent(0.23, 0.56));
  const auto table = summary_table(scan_results(root.path.string()), "coarse");
  const TableEntry* snt_p2 = nullptr;
  const TableEntry* c4_p2 = nullptr;
  const TableEntry* c7 = nullptr;
  for (const auto& e : table) {
    if (e.row == "SNT alone" && e.column == "P2") snt_p2 = &e;
    if (e.row == "Case 4" && e.column == "P2") c4_p2 = &e;
    if (e.row == "Case 7") c7 = &e;
  }
  ASSERT_TRUE(snt_p2 && c4_p2 && c7);
  ASSERT_TRUE(snt_p2->eta.has_value());
  EXPECT_NEAR(*snt_p2->eta, 0.44, 1e-12);
  ASSERT_TRUE(c4_p2->eta.has_value());
  EXPECT_NEAR(*c4_p2->axis_value, 0.23, 1e-12);
  EXPECT_NEAR(*c4_p2->eta, 0.56, 1e-12);
  EXPECT_FALSE(c7->eta.has_value());
  const auto text = format_summary(table);
  EXPECT_NE(text.find("(sweep case7_d)"), std::string::npos);
  EXPECT_NE(text.find("0.560000"), std::string::npos);
}
