#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "nanotip/sweep.hpp"

using namespace nanotip;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("nanotip_sweep_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
  fs::path results() const { return path / "results.jsonl"; }
};

SweepSpec gap_spec() {
  SweepSpec s;
  s.id = "unit_gap";
  s.base.case_id = "case4_p2";
  s.base.secondary = SecondaryKind::wire;
  s.base.secondary_material = "diamond";
  s.axis = SweepAxis::d;
  s.start = 0.05;
  s.stop = 0.29;
  s.step = 0.02;
  s.orientations = {Orientation::radial, Orientation::azimuthal};
  return s;
}

// Peaks at d = 0.19 for radial; azimuthal is flat and lower.
double fake_eta(const RunDescriptor& r) {
  if (r.orientation == Orientation::azimuthal) return 0.3;
  return 0.6 - 4.0 * std::pow(r.axis_value - 0.19, 2);
}

CouplingReport fake_report(const RunDescriptor& r, const SweepSpec& s) {
  CouplingReport rep;
  rep.key.case_id = r.geometry.case_id;
  rep.key.a = r.geometry.a;
  rep.key.d = r.geometry.d;
  rep.key.b_d = r.geometry.b_d;
  rep.key.orientation = r.orientation;
  rep.key.preset = s.preset;
  rep.eta_flux = fake_eta(r);
  rep.eta_modal = rep.eta_flux - 0.01;
  rep.p_total = 1.0;
  rep.converged = true;
  return rep;
}

RunFunction counting(std::atomic<int>& calls) {
  return [&calls](const RunDescriptor& r, const SweepSpec& s, int) {
    ++calls;
    return fake_report(r, s);
  };
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(SweepSpec, AxisValues) {
  auto s = gap_spec();
  const auto v = s.axis_values();
  ASSERT_EQ(v.size(), 13u);
  EXPECT_DOUBLE_EQ(v.front(), 0.05);
  EXPECT_DOUBLE_EQ(v.back(), 0.29);
  s.values = {0.3, 0.1, 0.3, 0.2};
  EXPECT_EQ(s.axis_values(), (std::vector<double>{0.1, 0.2, 0.3}));
  s.values.clear();
  s.step = 0.0;
  EXPECT_THROW(s.axis_values(), SweepError);
}

TEST(SweepSpec, Validation) {
  EXPECT_NO_THROW(validate_sweep(gap_spec()));
  auto s = gap_spec();
  s.orientations.clear();
  EXPECT_THROW(validate_sweep(s), SweepError);
  s = gap_spec();
  s.orientations = {Orientation::radial, Orientation::radial};
  EXPECT_THROW(validate_sweep(s), SweepError);
  s = gap_spec();
  s.stop = 0.9;
  EXPECT_THROW(validate_sweep(s), SweepError);
  s.extend = true;
  EXPECT_NO_THROW(validate_sweep(s));
  s = gap_spec();
  s.axis = SweepAxis::a;
  s.start = 0.1;
  s.stop = 0.5;
  s.chain = ChainedStage{"x", 0.05, 0.8, 0.05, Orientation::radial};
  EXPECT_THROW(validate_sweep(s), SweepError);
  s = gap_spec();
  s.preset = "ultra";
  EXPECT_THROW(validate_sweep(s), std::exception);
  EXPECT_THROW(parse_sweep_axis("theta"), SweepError);
  EXPECT_EQ(parse_sweep_axis("b_D"), SweepAxis::b_d);
}

TEST(SweepSpec, JsonAndHash) {
  auto s = gap_spec();
  s.chain = ChainedStage{"unit_gap_bD", 0.05, 0.8, 0.05, Orientation::radial};
  const auto back = sweep_from_json(to_json(s));
  EXPECT_EQ(spec_hash(back), spec_hash(s));
  EXPECT_EQ(spec_hash_hex(s).size(), 16u);
  auto other = s;
  other.stop = 0.31;
  EXPECT_NE(spec_hash(other), spec_hash(s));
  // The same grid spelled as explicit values is the same sweep.
  auto explicit_values = s;
  explicit_values.values = s.axis_values();
  EXPECT_EQ(spec_hash(explicit_values), spec_hash(s));
}

TEST(SweepSpec, PlanOrder) {
  const auto p = plan(gap_spec());
  ASSERT_EQ(p.size(), 26u);
  EXPECT_EQ(p[0].orientation, Orientation::radial);
  EXPECT_EQ(p[1].orientation, Orientation::azimuthal);
  EXPECT_DOUBLE_EQ(p[2].axis_value, 0.07);
  EXPECT_DOUBLE_EQ(p[2].geometry.d, 0.07);
  EXPECT_EQ(p[0].key(), "0.050000:radial");
}

TEST(Sweep, ExecutesEveryPointAndReplays) {
  TempDir dir;
  std::atomic<int> calls{0};
  const auto spec = gap_spec();
  const auto res = execute(spec, dir.str(), {}, counting(calls));
  EXPECT_EQ(calls, 26);
  EXPECT_TRUE(res.complete());
  EXPECT_EQ(lines_of(dir.results()).size(), 27u);
  const auto loaded = load_results(dir.str());
  EXPECT_TRUE(loaded.complete());
  EXPECT_EQ(loaded.hash, spec_hash_hex(spec));
  for (const auto& [k, row] : res.rows) EXPECT_EQ(to_json(*loaded.rows.at(k).report), to_json(*row.report));
}

TEST(Sweep, ResumeRunsOnlyMissingPoints) {
  TempDir dir;
  const auto spec = gap_spec();
  std::atomic<int> calls{0};
  RunFunction flaky = [&](const RunDescriptor& r, const SweepSpec& s, int) {
    ++calls;
    if (r.axis_value > 0.2) throw std::runtime_error("simulated crash");
    return fake_report(r, s);
  };
  const auto first = execute(spec, dir.str(), {}, flaky);
  EXPECT_FALSE(first.complete());
  int failed = 0;
  for (const auto& [k, row] : first.rows) {
    if (row.status == RowStatus::failed) {
      ++failed;
      EXPECT_EQ(row.error, "simulated crash");
    }
  }
  EXPECT_EQ(failed, 10);
  calls = 0;
  const auto second = execute(spec, dir.str(), {}, counting(calls));
  EXPECT_EQ(calls, failed);
  EXPECT_TRUE(second.complete());
  EXPECT_TRUE(load_results(dir.str()).complete());
  calls = 0;
  execute(spec, dir.str(), {}, counting(calls));
  EXPECT_EQ(calls, 0);
}

TEST(Sweep, TornFinalLineIsIgnoredAndRepaired) {
  TempDir dir;
  const auto spec = gap_spec();
  std::atomic<int> calls{0};
  execute(spec, dir.str(), {}, counting(calls));
  auto lines = lines_of(dir.results());
  // Drop the last two records and leave half of one behind, as a killed writer would.
  {
    std::ofstream out(dir.results(), std::ios::binary | std::ios::trunc);
    for (std::size_t i = 0; i + 2 < lines.size(); ++i) out << lines[i] << '\n';
    out << lines[lines.size() - 2].substr(0, 40);
  }
  const auto partial = load_results(dir.str());
  EXPECT_EQ(partial.done_rows().size(), 24u);
  calls = 0;
  const auto fixed = execute(spec, dir.str(), {}, counting(calls));
  EXPECT_EQ(calls, 2);
  EXPECT_TRUE(fixed.complete());
  for (const auto& l : lines_of(dir.results())) EXPECT_NO_THROW({ const auto j = nlohmann::json::parse(l); });
}

TEST(Sweep, CorruptMiddleRecordIsAnError) {
  TempDir dir;
  std::atomic<int> calls{0};
  execute(gap_spec(), dir.str(), {}, counting(calls));
  auto lines = lines_of(dir.results());
  lines[3] = "{not json";
  {
    std::ofstream out(dir.results(), std::ios::binary | std::ios::trunc);
    for (const auto& l : lines) out << l << '\n';
  }
  EXPECT_THROW(load_results(dir.str()), SweepError);
}

TEST(Sweep, RefusesResultsOfAnotherSpec) {
  TempDir dir;
  std::atomic<int> calls{0};
  execute(gap_spec(), dir.str(), {}, counting(calls));
  auto other = gap_spec();
  other.stop = 0.31;
  EXPECT_THROW(execute(other, dir.str(), {}, counting(calls)), SweepError);
}

TEST(Sweep, WorkerCountDoesNotChangeResults) {
  TempDir one, four;
  std::atomic<int> calls{0};
  const auto a = execute(gap_spec(), one.str(), {}, counting(calls));
  ExecuteOptions opts;
  opts.workers = 4;
  opts.thread_cap = 4;
  std::atomic<int> rows_seen{0};
  opts.on_row = [&](const SweepRow&) { ++rows_seen; };
  const auto b = execute(gap_spec(), four.str(), opts, counting(calls));
  EXPECT_EQ(rows_seen, 26);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (const auto& [k, row] : a.rows) EXPECT_EQ(to_json(*b.rows.at(k).report), to_json(*row.report));
  EXPECT_THROW(execute(gap_spec(), four.str(), ExecuteOptions{0, 1, {}}, counting(calls)), SweepError);
}

TEST(Sweep, ArgmaxAndChainedStage) {
  TempDir dir;
  auto spec = gap_spec();
  spec.chain = ChainedStage{"unit_gap_bD", 0.05, 0.8, 0.05, Orientation::radial};
  std::atomic<int> calls{0};
  const auto stage1 = execute(spec, dir.str(), {}, counting(calls));
  const auto [d, eta] = argmax(stage1, Orientation::radial);
  EXPECT_NEAR(d, 0.19, 1e-12);
  EXPECT_NEAR(eta, 0.6, 1e-12);
  // Flat curve: the smallest gap wins the tie.
  EXPECT_NEAR(argmax(stage1, Orientation::azimuthal).first, 0.05, 1e-12);
  EXPECT_THROW(argmax(stage1, Orientation::axial), SweepError);

  const auto s2 = chained_spec(stage1);
  EXPECT_EQ(s2.id, "unit_gap_bD");
  EXPECT_EQ(s2.axis, SweepAxis::b_d);
  EXPECT_NEAR(s2.base.d, 0.19, 1e-12);
  EXPECT_EQ(s2.axis_values().size(), 16u);
  EXPECT_NO_THROW(validate_sweep(s2));
  auto unchained = stage1;
  unchained.spec.chain.reset();
  EXPECT_THROW(chained_spec(unchained), SweepError);
  auto incomplete = stage1;
  incomplete.rows.begin()->second.status = RowStatus::failed;
  EXPECT_THROW(chained_spec(incomplete), SweepError);
}

TEST(Sweep, CsvHasOneLinePerDoneRow) {
  TempDir dir;
  std::atomic<int> calls{0};
  const auto res = execute(gap_spec(), dir.str(), {}, counting(calls));
  const auto csv = dir.path / "results.csv";
  write_sweep_csv(res, csv.string());
  const auto lines = lines_of(csv);
  ASSERT_EQ(lines.size(), 27u);
  EXPECT_EQ(lines[0], report_csv_header());
  EXPECT_EQ(lines[1].rfind("case4_p2,", 0), 0u);
}

TEST(Sweep, BuiltinsAreValid) {
  for (const auto& id : builtin_sweep_ids()) {
    SCOPED_TRACE(id);
    const auto s = builtin_sweep(id);
    EXPECT_EQ(s.id, id);
    EXPECT_NO_THROW(validate_sweep(s));
  }
  EXPECT_EQ(builtin_sweep("case5_a").axis_values().size(), 20u);
  EXPECT_EQ(builtin_sweep("snt_alone").axis_values(), (std::vector<double>{0.2, 0.43, 0.71}));
  EXPECT_EQ(builtin_sweep("case4_p2_d").axis_values().size(), 23u);
  EXPECT_TRUE(builtin_sweep("case4_p2_d").chain.has_value());
  EXPECT_EQ(builtin_sweep("case6_bD").axis_values().size(), 16u);
  EXPECT_THROW(builtin_sweep("case9_d"), std::exception);
}
