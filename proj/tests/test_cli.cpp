#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "json.hpp"
#include "nanotip/config.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr folded into the captured output.
Outcome cli(const std::string& args) {
  const std::string cmd = std::string("NANOTIP_THREADS=1 '") + NANOTIP_CLI_PATH + "' " + args + " 2>&1";
  Outcome o;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return o;
  std::array<char, 4096> buf{};
  for (std::size_t n; (n = fread(buf.data(), 1, buf.size(), p)) > 0;) o.out.append(buf.data(), n);
  const int status = pclose(p);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("nanotip_cli_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  return p;
}

bool has(const std::string& text, const std::string& needle) { return text.find(needle) != std::string::npos; }

}  // namespace

TEST(Cli, ListNamesEverything) {
  const auto r = cli("list");
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(has(r.out, "case4_p2"));
  EXPECT_TRUE(has(r.out, "fig4d"));
}

TEST(Cli, ValidateBuiltin) {
  const auto r = cli("validate --builtin case4_p2");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(has(r.out, "multi-mode"));
  EXPECT_TRUE(has(r.out, "44 steps per period"));
  EXPECT_TRUE(has(r.out, "valid"));
}

TEST(Cli, ConfigurationErrorsExitTwo) {
  auto r = cli("validate --builtin snt_alone_p2 --set primitives.0.radiuss=0.4");
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(has(r.out, "radiuss")) << r.out;
  r = cli("validate --builtin snt_alone_p2 --set primitives.0.radius=0");
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(has(r.out, "primary")) << r.out;
  EXPECT_EQ(cli("run --builtin snt_alone_p2 --threads 0").code, 2);
  EXPECT_EQ(cli("validate --builtin nope").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
  EXPECT_EQ(cli("sweep --builtin case4_p2_d --values 2.0 --out /nonexistent/x").code, 2);
}

TEST(Cli, MissingInputsExitThree) {
  EXPECT_EQ(cli("validate /nonexistent/config.json").code, 3);
  const auto empty = scratch("empty");
  fs::create_directories(empty);
  const auto r = cli("report --results '" + empty.string() + "' --out '" + (empty / "fig").string() + "'");
  EXPECT_EQ(r.code, 3);
  EXPECT_TRUE(has(r.out, "nanotip sweep")) << r.out;
  fs::remove_all(empty);
}

TEST(Cli, ModesTable) {
  const auto r = cli("modes --radius 0.2");
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(has(r.out, "V = 2.15 (single-mode)")) << r.out;
  EXPECT_TRUE(has(r.out, "HE11e"));
  EXPECT_FALSE(has(r.out, "TE01"));
  const auto csv = cli("modes --radius 0.43 --csv");
  EXPECT_EQ(csv.code, 0);
  EXPECT_TRUE(has(csv.out, "TE01,0,1,"));
}

TEST(Cli, ConfigFileRoundTrip) {
  const auto dir = scratch("cfg");
  fs::create_directories(dir);
  const auto good = dir / "snt.json";
  std::ofstream(good) << nanotip::to_json(nanotip::builtin_config("snt_alone_p1")).dump(2);
  const auto r = cli("validate '" + good.string() + "'");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(has(r.out, "single-mode")) << r.out;
  const auto medium = cli("validate '" + good.string() + "' --preset medium");
  EXPECT_EQ(medium.code, 0);
  EXPECT_TRUE(has(medium.out, "dx = 0.0150000 um")) << medium.out;
  const auto path = dir / "bad.json";
  std::ofstream(path) << "{ not json";
  EXPECT_EQ(cli("validate '" + path.string() + "'").code, 2);
  fs::remove_all(dir);
}

TEST(Cli, VacuumRunRecoversDipolePower) {
  const auto dir = scratch("vac");
  fs::create_directories(dir);
  const auto out = dir / "report.json";
  const auto r = cli("run --builtin vacuum --set 'domain.extents=[1.2,1.2,1.2]' --set 'source.position=[0,0,0.6]' "
                     "--set monitors.flux_distance=0.3 --set source.ramp_cycles=5 --out '" +
                     out.string() + "'");
  ASSERT_EQ(r.code, 0) << r.out;
  std::ifstream in(out);
  const auto rep = nlohmann::json::parse(in);
  EXPECT_NEAR(rep.at("purcell_ratio").get<double>(), 1.0, 0.02);
  EXPECT_TRUE(rep.at("converged").get<bool>());
  EXPECT_TRUE(rep.at("flags").empty());
  fs::remove_all(dir);
}
