// nanotip: validate configs, run single simulations and sweeps, solve fiber
// modes and regenerate figure data.
//
// Exit codes: 0 ok, 1 physics or convergence failure, 2 configuration or
// usage error, 3 missing inputs.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nanotip/config.hpp"
#include "nanotip/coupling.hpp"
#include "nanotip/fdtd.hpp"
#include "nanotip/report.hpp"
#include "nanotip/simulation.hpp"
#include "nanotip/snapshot.hpp"
#include "nanotip/sweep.hpp"
#include "nanotip/waveguide_modes.hpp"

using namespace nanotip;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kPhysics = 1, kConfig = 2, kMissing = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingFile : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int default_threads() {
  if (const char* env = std::getenv("NANOTIP_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("NANOTIP_THREADS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

struct ConfigArgs {
  std::string path;
  std::string builtin;
  std::string preset;
  std::vector<std::string> overrides;
  std::string orientation;

  void add_to(CLI::App* cmd) {
    cmd->add_option("config", path, "JSON configuration file");
    cmd->add_option("--builtin", builtin, "built-in case instead of a file (see `nanotip list`)");
    cmd->add_option("--preset", preset, "resolution preset: coarse, medium, fine");
    cmd->add_option("--set", overrides, "override a dotted key, e.g. --set source.orientation=axial");
    cmd->add_option("--orientation", orientation, "emitter orientation: radial, azimuthal, axial");
  }

  SimulationConfig load() const {
    if (path.empty() == builtin.empty()) throw UsageError("give either a config file or --builtin NAME");
    json doc;
    if (!builtin.empty()) {
      doc = to_json(builtin_config(builtin, preset.empty() ? "coarse" : preset));
    } else {
      std::ifstream in(path);
      if (!in) throw MissingFile("cannot read config '" + path + "'");
      try {
        doc = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ConfigurationError("'" + path + "' is not valid JSON: " + e.what());
      }
      if (!preset.empty()) {
        if (!doc.is_object()) throw ConfigurationError("configuration must be a JSON object");
        doc["run"]["preset"] = preset;
        doc["domain"]["grid_step"] = preset_grid_step(preset);
      }
    }
    for (const auto& o : overrides) apply_override(doc, o);
    if (!orientation.empty()) doc["source"]["orientation"] = orientation;
    return parse_config(doc);
  }
};

void print_plan(const SimulationConfig& cfg, const RunPlan& plan) {
  const auto& g = plan.geometry;
  std::printf("grid %d x %d x %d cells (%s cells), dx = %s um\n", g.nx, g.ny, g.nz,
              format_sig6(double(g.nx) * g.ny * g.nz).c_str(), format_sig6(g.dx).c_str());
  std::printf("dt = %s fs (Courant limit %s fs), %d steps per period, at most %ld steps\n",
              format_sig6(plan.dt_fs).c_str(), format_sig6(plan.courant_limit_fs).c_str(), plan.steps_per_period,
              plan.max_steps);
  std::printf("memory estimate %s MB\n", format_sig6(plan.memory_bytes / 1e6).c_str());
  if (cfg.scene.pair) {
    const auto& p = cfg.scene.pair->primary;
    const double n1 = cfg.scene.material_of(p).refractive_index;
    if (n1 > cfg.scene.background_index) {
      const double v = v_number(p.radius, n1, cfg.scene.background_index, cfg.source.wavelength);
      std::printf("V = %.2f (%s)\n", v, v < 2.405 ? "single-mode" : "multi-mode");
    }
  }
}

int cmd_validate(const ConfigArgs& args) {
  const SimulationConfig cfg = args.load();
  const auto violations = validate_scene(cfg.scene);
  if (!violations.empty()) {
    for (const auto& v : violations) std::printf("violation: %s: %s\n", v.subject.c_str(), v.message.c_str());
    return kConfig;
  }
  print_plan(cfg, plan_run(cfg));
  std::printf("valid\n");
  return kOk;
}

int cmd_run(const ConfigArgs& args, int threads, const std::string& out, const std::string& snapshot,
            const std::string& phasors) {
  SimulationConfig cfg = args.load();
  if (!snapshot.empty()) cfg.run.snapshot = snapshot;
  const RunPlan plan = plan_run(cfg);
  print_plan(cfg, plan);
  SimulationResult r;
  try {
    r = run_simulation(cfg, threads);
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kPhysics;
  }
  const std::string text = to_json(r.report).dump(1) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(out);
    f << text;
    if (!f) throw std::runtime_error("cannot write '" + out + "'");
  }
  if (!phasors.empty()) write_phasor_dump(phasors, r.monitor);
  const auto& rep = r.report;
  std::printf("eta = %s  eta_modal = %s  purcell_ratio = %s  converged = %s  steps = %ld\n",
              format_sig6(rep.eta_flux).c_str(), format_sig6(rep.eta_modal).c_str(),
              format_sig6(rep.purcell_ratio).c_str(), rep.converged ? "true" : "false", rep.steps);
  for (const auto& f : rep.flags) std::printf("flag: %s\n", f.c_str());
  return rep.converged && rep.flags.empty() ? kOk : kPhysics;
}

std::vector<Orientation> parse_orientations(const std::vector<std::string>& names) {
  std::vector<Orientation> out;
  for (const auto& n : names) out.push_back(parse_orientation(n));
  return out;
}

struct SweepArgs {
  std::string builtin, spec_path, id, preset, out = "results";
  std::vector<std::string> orientations;
  std::vector<double> values;
  double start = -1, stop = -1, step = -1;
  bool extend = false, no_chain = false;
  int workers = 1;
};

SweepSpec load_sweep(const SweepArgs& a) {
  if (a.builtin.empty() == a.spec_path.empty()) throw UsageError("give either --builtin ID or --spec FILE");
  SweepSpec s;
  if (!a.builtin.empty()) {
    s = builtin_sweep(a.builtin, a.preset.empty() ? "coarse" : a.preset);
  } else {
    std::ifstream in(a.spec_path);
    if (!in) throw MissingFile("cannot read sweep spec '" + a.spec_path + "'");
    try {
      s = sweep_from_json(json::parse(in));
    } catch (const json::exception& e) {
      throw ConfigurationError("bad sweep spec '" + a.spec_path + "': " + e.what());
    }
    if (!a.preset.empty()) s.preset = a.preset;
  }
  if (!a.id.empty()) s.id = a.id;
  if (!a.orientations.empty()) s.orientations = parse_orientations(a.orientations);
  if (!a.values.empty()) s.values = a.values;
  if (a.start >= 0 || a.stop >= 0 || a.step >= 0) {
    if (!a.values.empty()) throw UsageError("--values excludes --start/--stop/--step");
    s.values.clear();
    if (a.start >= 0) s.start = a.start;
    if (a.stop >= 0) s.stop = a.stop;
    if (a.step >= 0) s.step = a.step;
  }
  if (a.extend) s.extend = true;
  if (a.no_chain) s.chain.reset();
  validate_sweep(s);
  return s;
}

int run_one_sweep(const SweepSpec& spec, const std::string& root, int workers, int threads, SweepResult& out) {
  const std::string dir = (fs::path(root) / spec.id).string();
  std::printf("sweep %s: %zu runs -> %s\n", spec.id.c_str(), plan(spec).size(), dir.c_str());
  std::fflush(stdout);
  ExecuteOptions opt;
  opt.workers = workers;
  opt.thread_cap = threads;
  opt.on_row = [](const SweepRow& row) {
    if (row.report) {
      std::printf("  %s eta = %s%s\n", row.run.key().c_str(), format_sig6(row.report->eta_flux).c_str(),
                  row.report->converged ? "" : " (not converged)");
    } else {
      std::printf("  %s failed: %s\n", row.run.key().c_str(), row.error.c_str());
    }
    std::fflush(stdout);
  };
  out = execute(spec, dir, opt);
  write_sweep_csv(out, (fs::path(dir) / "results.csv").string());
  int failed = 0;
  for (const auto& [k, r] : out.rows) failed += r.status == RowStatus::failed;
  for (auto o : spec.orientations) {
    if (!out.done_rows(o).empty()) {
      const auto [x, eta] = argmax(out, o);
      std::printf("argmax %s: %s = %s, eta = %s\n", to_string(o).c_str(), to_string(spec.axis).c_str(),
                  format_sig6(x).c_str(), format_sig6(eta).c_str());
    }
  }
  if (failed) std::printf("%d runs failed; rerun the same command to retry them\n", failed);
  return failed ? kPhysics : kOk;
}

int cmd_sweep(const SweepArgs& a, int threads) {
  if (a.workers < 1) throw UsageError("--workers must be at least 1");
  const SweepSpec spec = load_sweep(a);
  SweepResult stage1;
  int code = run_one_sweep(spec, a.out, a.workers, threads, stage1);
  if (code == kOk && spec.chain) {
    SweepResult stage2;
    code = run_one_sweep(chained_spec(stage1), a.out, a.workers, threads, stage2);
  }
  return code;
}

int cmd_modes(const ConfigArgs& args, double radius, double n_core, double n_clad, double wavelength, bool csv) {
  StepIndexFiber fiber{radius, n_core, n_clad, wavelength};
  if (!args.path.empty() || !args.builtin.empty()) {
    const SimulationConfig cfg = args.load();
    if (!cfg.scene.pair) throw ConfigurationError("configuration has no primary structure");
    const auto& p = cfg.scene.pair->primary;
    fiber = {p.radius, cfg.scene.material_of(p).refractive_index, cfg.scene.background_index,
             cfg.source.wavelength};
  }
  if (!(fiber.radius > 0)) throw UsageError("give --radius or a configuration");
  const double v = v_number(fiber.radius, fiber.n_core, fiber.n_clad, fiber.wavelength);
  const auto modes = solve_modes(fiber);
  if (csv) {
    std::printf("label,nu,m,n_eff,cutoff_v,core_fraction\n");
    for (const auto& m : modes) {
      std::printf("%s,%d,%d,%s,%s,%s\n", m.label.str().c_str(), m.label.nu, m.label.m, format_sig6(m.n_eff).c_str(),
                  format_sig6(cutoff_v(m.label, fiber.n_core, fiber.n_clad)).c_str(),
                  format_sig6(core_power_fraction(m)).c_str());
    }
    return kOk;
  }
  std::printf("a = %s um, n_core = %s, n_clad = %s, wavelength = %s um\n", format_sig6(fiber.radius).c_str(),
              format_sig6(fiber.n_core).c_str(), format_sig6(fiber.n_clad).c_str(),
              format_sig6(fiber.wavelength).c_str());
  std::printf("V = %.2f (%s)\n", v, v < 2.405 ? "single-mode" : "multi-mode");
  std::printf("%-8s %-3s %-3s %-10s %-10s %s\n", "mode", "nu", "m", "n_eff", "V_cutoff", "core_fraction");
  for (const auto& m : modes) {
    std::printf("%-8s %-3d %-3d %-10s %-10s %s\n", m.label.str().c_str(), m.label.nu, m.label.m,
                format_sig6(m.n_eff).c_str(), format_sig6(cutoff_v(m.label, fiber.n_core, fiber.n_clad)).c_str(),
                format_sig6(core_power_fraction(m)).c_str());
  }
  return kOk;
}

int cmd_report(const std::string& results, const std::vector<std::string>& figures, bool all,
               const std::string& out, const std::string& preset) {
  std::error_code ec;
  std::vector<std::string> errors;
  const auto sweeps = scan_results(results, &errors);
  for (const auto& e : errors) std::fprintf(stderr, "warning: %s\n", e.c_str());
  if (sweeps.empty()) {
    std::fprintf(stderr, "no sweep results under '%s'; run e.g. `nanotip sweep --builtin case4_p2_d --out %s`\n",
                 results.c_str(), results.c_str());
    return kMissing;
  }
  for (const auto& s : sweeps) {
    if (!s.result.complete()) std::fprintf(stderr, "note: sweep in %s is incomplete\n", s.dir.c_str());
  }
  std::vector<std::string> ids = figures;
  if (all) {
    for (const auto& f : figure_defs()) ids.push_back(f.id);
  }
  std::vector<std::string> missing;
  if (!ids.empty()) fs::create_directories(out, ec);
  for (const auto& id : ids) {
    const FigureDef& def = figure_def(id);
    try {
      const auto rows = figure_rows(sweeps, def, preset);
      const std::string path = (fs::path(out) / ("figure_" + id + ".csv")).string();
      std::ofstream f(path, std::ios::binary);
      f << figure_csv(rows);
      if (!f) throw std::runtime_error("cannot write '" + path + "'");
      std::printf("wrote %s (%zu rows)\n", path.c_str(), rows.size());
    } catch (const MissingInputs& e) {
      std::fprintf(stderr, "%s\n", e.what());
      missing.insert(missing.end(), e.needed.begin(), e.needed.end());
    }
  }
  std::printf("\nmaximum efficiency summary (radial emitter, preset %s)\n", preset.c_str());
  std::printf("%s", format_summary(summary_table(sweeps, preset)).c_str());
  if (!missing.empty()) {
    std::fprintf(stderr, "missing sweeps; run:\n");
    for (const auto& m : missing) {
      std::fprintf(stderr, "  nanotip sweep --builtin %s --preset %s --out %s\n", m.c_str(), preset.c_str(),
                   results.c_str());
    }
    return kMissing;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dipole-to-nanotip coupling: FDTD runs, fiber modes, sweeps and figure data"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");
  int threads = 0;
  bool threads_given = false;
  auto add_threads = [&](CLI::App* cmd) {
    cmd->add_option_function<int>(
           "--threads",
           [&](int n) {
             threads = n;
             threads_given = true;
           },
           "worker threads (default: $NANOTIP_THREADS or 1)");
  };

  ConfigArgs vargs;
  auto* validate = app.add_subcommand("validate", "check a configuration and print derived quantities");
  vargs.add_to(validate);

  ConfigArgs rargs;
  std::string report_out, snapshot, phasors;
  auto* run = app.add_subcommand("run", "run one simulation and write its coupling report");
  rargs.add_to(run);
  add_threads(run);
  run->add_option("--out", report_out, "write the report JSON here instead of stdout");
  run->add_option("--snapshot", snapshot, "dump the final fields (JSON header + float32)");
  run->add_option("--phasors", phasors, "dump the monitor phasors (JSON header + float32)");

  SweepArgs sargs;
  auto* sweep = app.add_subcommand("sweep", "run or resume a parameter sweep");
  sweep->add_option("--builtin", sargs.builtin, "built-in sweep id (see `nanotip list`)");
  sweep->add_option("--spec", sargs.spec_path, "sweep spec JSON file");
  sweep->add_option("--id", sargs.id, "results subdirectory name (default: the sweep id)");
  sweep->add_option("--preset", sargs.preset, "resolution preset");
  sweep->add_option("--orientations", sargs.orientations, "subset of radial, azimuthal, axial");
  sweep->add_option("--values", sargs.values, "explicit axis values in um");
  sweep->add_option("--start", sargs.start, "first axis value in um");
  sweep->add_option("--stop", sargs.stop, "last axis value in um");
  sweep->add_option("--step", sargs.step, "axis step in um");
  sweep->add_flag("--extend", sargs.extend, "allow axis values outside the studied ranges");
  sweep->add_flag("--no-chain", sargs.no_chain, "skip the chained radius sweep");
  sweep->add_option("--out", sargs.out, "results root directory")->capture_default_str();
  sweep->add_option("--workers", sargs.workers, "simulations run concurrently")->capture_default_str();
  add_threads(sweep);

  ConfigArgs margs;
  double radius = 0.0, n_core = 1.457, n_clad = 1.0, wavelength = 0.62;
  auto* modes = app.add_subcommand("modes", "list the guided modes of a step-index cylinder");
  margs.add_to(modes);
  modes->add_option("--radius", radius, "core radius in um");
  modes->add_option("--n-core", n_core, "core index")->capture_default_str();
  modes->add_option("--n-clad", n_clad, "cladding index")->capture_default_str();
  modes->add_option("--wavelength", wavelength, "vacuum wavelength in um")->capture_default_str();
  bool modes_csv = false;
  modes->add_flag("--csv", modes_csv, "print CSV instead of a table");

  std::string results = "results", fig_out = "figures", report_preset = "coarse";
  std::vector<std::string> figures;
  bool all_figures = false;
  auto* report = app.add_subcommand("report", "emit figure CSVs and the maximum-efficiency summary");
  report->add_option("--results", results, "results root directory")->capture_default_str();
  report->add_option("--figure", figures, "figure id: fig2a..fig2f, fig3a, fig3b, fig4a..fig4d");
  report->add_flag("--all", all_figures, "emit every figure");
  report->add_option("--out", fig_out, "directory for figure CSVs")->capture_default_str();
  report->add_option("--preset", report_preset, "preset of the sweeps to use")->capture_default_str();

  auto* list = app.add_subcommand("list", "list built-in configurations, sweeps and figures");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (threads_given && threads < 1) throw UsageError("--threads must be at least 1");
    if (!threads_given) threads = default_threads();
    if (*validate) return cmd_validate(vargs);
    if (*run) return cmd_run(rargs, threads, report_out, snapshot, phasors);
    if (*sweep) return cmd_sweep(sargs, threads);
    if (*modes) return cmd_modes(margs, radius, n_core, n_clad, wavelength, modes_csv);
    if (*report) return cmd_report(results, figures, all_figures, fig_out, report_preset);
    if (*list) {
      std::printf("configs:");
      for (const auto& n : builtin_names()) std::printf(" %s", n.c_str());
      std::printf("\nsweeps:");
      for (const auto& n : builtin_sweep_ids()) std::printf(" %s", n.c_str());
      std::printf("\nfigures:");
      for (const auto& f : figure_defs()) std::printf(" %s", f.id.c_str());
      std::printf("\npresets:");
      for (const auto& p : preset_names()) std::printf(" %s", p.c_str());
      std::printf("\n");
      return kOk;
    }
  } catch (const MissingFile& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kMissing;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kConfig;
  } catch (const ConfigurationError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kConfig;
  } catch (const SceneError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kConfig;
  } catch (const SweepError& e) {
    std::fprintf(stderr, "sweep error: %s\n", e.what());
    return kConfig;
  } catch (const ModeError& e) {
    std::fprintf(stderr, "mode error: %s\n", e.what());
    return kConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kPhysics;
  }
  return kOk;
}
