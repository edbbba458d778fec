#include "nanotip/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "nanotip/simulation.hpp"

namespace nanotip {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::d: return "d";
    case SweepAxis::b_d: return "b_D";
    case SweepAxis::a: return "a";
  }
  return "d";
}

SweepAxis parse_sweep_axis(const std::string& text) {
  if (text == "d") return SweepAxis::d;
  if (text == "b_D") return SweepAxis::b_d;
  if (text == "a") return SweepAxis::a;
  throw SweepError("sweep axis must be d, b_D or a, got '" + text + "'");
}

namespace {

// Axis values are kept on a 1e-9 um lattice so plans and keys are reproducible.
double snap(double v) { return std::round(v * 1e9) / 1e9; }

struct Range {
  double lo, hi;
};

Range studied_range(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::d: return {0.05, 0.5};
    case SweepAxis::b_d: return {0.05, 0.8};
    case SweepAxis::a: return {0.062, 1.24};
  }
  return {0.0, 0.0};
}

json geometry_json(const CaseGeometry& g) {
  return {{"case", g.case_id},
          {"primary_material", g.primary_material},
          {"a", g.a},
          {"secondary", to_string(g.secondary)},
          {"secondary_material", g.secondary_material},
          {"b_D", g.b_d},
          {"d", g.d}};
}

CaseGeometry geometry_from_json(const json& j) {
  CaseGeometry g;
  g.case_id = j.at("case").get<std::string>();
  g.primary_material = j.at("primary_material").get<std::string>();
  g.a = j.at("a").get<double>();
  g.secondary = parse_secondary_kind(j.at("secondary").get<std::string>());
  g.secondary_material = j.at("secondary_material").get<std::string>();
  g.b_d = j.at("b_D").get<double>();
  g.d = j.at("d").get<double>();
  return g;
}

std::string status_str(RowStatus s) {
  switch (s) {
    case RowStatus::done: return "done";
    case RowStatus::failed: return "failed";
    case RowStatus::pending: return "pending";
  }
  return "pending";
}

json row_json(const SweepRow& row) {
  json j = {{"key", row.run.key()},
            {"axis_value", row.run.axis_value},
            {"orientation", to_string(row.run.orientation)},
            {"status", status_str(row.status)}};
  if (row.report) j["report"] = to_json(*row.report);
  if (!row.error.empty()) j["error"] = row.error;
  return j;
}

RunDescriptor make_descriptor(const SweepSpec& spec, double value, Orientation o) {
  RunDescriptor r;
  r.axis_value = value;
  r.orientation = o;
  r.geometry = spec.base;
  r.geometry.orientation = o;
  switch (spec.axis) {
    case SweepAxis::d: r.geometry.d = value; break;
    case SweepAxis::b_d: r.geometry.b_d = value; break;
    case SweepAxis::a:
      r.geometry.a = value;
      break;
  }
  return r;
}

std::string results_path(const std::string& dir) { return (fs::path(dir) / "results.jsonl").string(); }

struct Replay {
  SweepResult result;
  std::uintmax_t valid_bytes = 0;  // length of the well-formed prefix
};

Replay replay(const std::string& dir) {
  const std::string path = results_path(dir);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SweepError("no results file at '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  Replay r;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) break;  // torn final record
    const std::string line = text.substr(pos, nl - pos);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      if (text.find('\n', nl + 1) == std::string::npos) break;
      throw SweepError("corrupt record in '" + path + "'");
    }
    if (header) {
      r.result.spec = sweep_from_json(j.at("spec"));
      r.result.hash = j.at("spec_hash").get<std::string>();
      for (const auto& d : plan(r.result.spec)) r.result.rows[d.key()] = SweepRow{d, RowStatus::pending, {}, {}};
      header = false;
    } else {
      const std::string key = j.at("key").get<std::string>();
      auto it = r.result.rows.find(key);
      if (it == r.result.rows.end()) throw SweepError("record '" + key + "' is not part of the sweep plan");
      SweepRow& row = it->second;
      const std::string st = j.at("status").get<std::string>();
      if (st == "done") {
        row.status = RowStatus::done;
        row.report = report_from_json(j.at("report"));
        row.error.clear();
      } else if (row.status != RowStatus::done) {
        row.status = RowStatus::failed;
        row.error = j.value("error", std::string());
      }
    }
    pos = nl + 1;
    r.valid_bytes = pos;
  }
  if (header) throw SweepError("results file '" + path + "' has no header");
  return r;
}

}  // namespace

std::vector<double> SweepSpec::axis_values() const {
  std::vector<double> out;
  if (!values.empty()) {
    for (double v : values) out.push_back(snap(v));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  if (!(step > 0.0)) throw SweepError("sweep step must be positive");
  if (stop < start) throw SweepError("sweep stop lies below start");
  const long n = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
  for (long i = 0; i < n; ++i) out.push_back(snap(start + i * step));
  return out;
}

void validate_sweep(const SweepSpec& spec) {
  if (spec.orientations.empty()) throw SweepError("sweep needs at least one orientation");
  std::set<Orientation> seen(spec.orientations.begin(), spec.orientations.end());
  if (seen.size() != spec.orientations.size()) throw SweepError("duplicate orientation in sweep");
  const auto values = spec.axis_values();
  if (values.empty()) throw SweepError("sweep has no axis values");
  for (double v : values) {
    if (!(v > 0.0) && !(spec.axis == SweepAxis::d && v == 0.0)) {
      throw SweepError("sweep value " + format_sig6(v) + " is not physical");
    }
  }
  if (!spec.extend) {
    const Range r = studied_range(spec.axis);
    for (double v : values) {
      if (v < r.lo - 1e-9 || v > r.hi + 1e-9) {
        throw SweepError(to_string(spec.axis) + " = " + format_sig6(v) + " lies outside [" + format_sig6(r.lo) +
                         ", " + format_sig6(r.hi) + "]; pass --extend to allow it");
      }
    }
  }
  if (spec.chain && spec.axis != SweepAxis::d) throw SweepError("only gap sweeps can chain a second stage");
  preset_grid_step(spec.preset);
}

json to_json(const SweepSpec& spec) {
  json orient = json::array();
  for (auto o : spec.orientations) orient.push_back(to_string(o));
  json j = {{"id", spec.id},
            {"base", geometry_json(spec.base)},
            {"axis", to_string(spec.axis)},
            {"values", spec.axis_values()},
            {"orientations", orient},
            {"preset", spec.preset},
            {"extend", spec.extend}};
  if (spec.chain) {
    j["chain"] = {{"id", spec.chain->id},
                  {"start", spec.chain->start},
                  {"stop", spec.chain->stop},
                  {"step", spec.chain->step},
                  {"argmax_orientation", to_string(spec.chain->argmax_orientation)}};
  }
  return j;
}

SweepSpec sweep_from_json(const json& j) {
  SweepSpec s;
  s.id = j.at("id").get<std::string>();
  s.base = geometry_from_json(j.at("base"));
  s.axis = parse_sweep_axis(j.at("axis").get<std::string>());
  if (j.contains("values")) {
    s.values = j.at("values").get<std::vector<double>>();
  } else {
    s.start = j.at("start").get<double>();
    s.stop = j.at("stop").get<double>();
    s.step = j.at("step").get<double>();
  }
  for (const auto& o : j.at("orientations")) s.orientations.push_back(parse_orientation(o.get<std::string>()));
  s.preset = j.value("preset", std::string("coarse"));
  s.extend = j.value("extend", false);
  if (j.contains("chain")) {
    const json& c = j.at("chain");
    s.chain = ChainedStage{c.at("id").get<std::string>(), c.at("start").get<double>(), c.at("stop").get<double>(),
                           c.at("step").get<double>(),
                           parse_orientation(c.at("argmax_orientation").get<std::string>())};
  }
  return s;
}

std::uint64_t spec_hash(const SweepSpec& spec) {
  const std::string text = to_json(spec).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string spec_hash_hex(const SweepSpec& spec) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(spec_hash(spec)));
  return buf;
}

std::string RunDescriptor::key() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f:", axis_value);
  return buf + to_string(orientation);
}

std::vector<RunDescriptor> plan(const SweepSpec& spec) {
  validate_sweep(spec);
  std::vector<RunDescriptor> out;
  for (double v : spec.axis_values()) {
    for (auto o : spec.orientations) out.push_back(make_descriptor(spec, v, o));
  }
  return out;
}

std::vector<const SweepRow*> SweepResult::done_rows(std::optional<Orientation> orientation) const {
  std::vector<const SweepRow*> out;
  for (const auto& [key, row] : rows) {
    if (row.status != RowStatus::done) continue;
    if (orientation && row.run.orientation != *orientation) continue;
    out.push_back(&row);
  }
  std::sort(out.begin(), out.end(), [](const SweepRow* a, const SweepRow* b) {
    if (a->run.axis_value != b->run.axis_value) return a->run.axis_value < b->run.axis_value;
    return a->run.orientation < b->run.orientation;
  });
  return out;
}

bool SweepResult::complete() const {
  return std::all_of(rows.begin(), rows.end(), [](const auto& kv) { return kv.second.status == RowStatus::done; });
}

std::pair<double, double> argmax(const SweepResult& result, Orientation orientation) {
  const auto rows = result.done_rows(orientation);
  if (rows.empty()) throw SweepError("no completed rows for orientation " + to_string(orientation));
  const SweepRow* best = rows.front();
  for (const auto* r : rows) {
    if (r->report->eta_flux > best->report->eta_flux) best = r;
  }
  return {best->run.axis_value, best->report->eta_flux};
}

SweepSpec chained_spec(const SweepResult& stage1) {
  const SweepSpec& s1 = stage1.spec;
  if (!s1.chain) throw SweepError("sweep '" + s1.id + "' has no chained stage");
  if (!stage1.complete()) throw SweepError("stage 1 '" + s1.id + "' is not complete");
  SweepSpec s2;
  s2.id = s1.chain->id;
  s2.base = s1.base;
  s2.base.d = argmax(stage1, s1.chain->argmax_orientation).first;
  s2.axis = SweepAxis::b_d;
  s2.start = s1.chain->start;
  s2.stop = s1.chain->stop;
  s2.step = s1.chain->step;
  s2.orientations = s1.orientations;
  s2.preset = s1.preset;
  s2.extend = s1.extend;
  return s2;
}

RunFunction simulation_runner() {
  return [](const RunDescriptor& run, const SweepSpec& spec, int threads) {
    SimulationConfig cfg = make_case_config(run.geometry, spec.preset);
    return run_simulation(cfg, threads).report;
  };
}

SweepResult execute(const SweepSpec& spec, const std::string& dir, const ExecuteOptions& options,
                    const RunFunction& run) {
  if (options.workers < 1) throw SweepError("workers must be at least 1");
  if (options.thread_cap < 1) throw SweepError("thread cap must be at least 1");
  const auto runs = plan(spec);
  const std::string hash = spec_hash_hex(spec);
  const std::string path = results_path(dir);

  SweepResult result;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (fs::exists(path)) {
    Replay r = replay(dir);
    if (r.result.hash != hash) {
      throw SweepError("results in '" + dir + "' were written for a different sweep spec (hash " + r.result.hash +
                       ", now " + hash + "); use a fresh output directory");
    }
    if (r.valid_bytes < fs::file_size(path)) fs::resize_file(path, r.valid_bytes);
    result = std::move(r.result);
  } else {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SweepError("cannot create '" + path + "'");
    out << json{{"spec_hash", hash}, {"spec", to_json(spec)}}.dump() << '\n';
    out.flush();
    if (!out) throw SweepError("cannot write '" + path + "'");
    result.spec = spec;
    result.hash = hash;
    for (const auto& d : runs) result.rows[d.key()] = SweepRow{d, RowStatus::pending, {}, {}};
  }

  std::vector<RunDescriptor> todo;
  for (const auto& d : runs) {
    if (result.rows.at(d.key()).status != RowStatus::done) todo.push_back(d);
  }

  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw SweepError("cannot append to '" + path + "'");
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> io_failed{false};
  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(todo.size())));
  const int threads_each = std::max(1, options.thread_cap / workers);

  auto worker = [&] {
    for (;;) {
      if (io_failed) return;
      const std::size_t i = next++;
      if (i >= todo.size()) return;
      SweepRow row;
      row.run = todo[i];
      try {
        row.report = run(todo[i], spec, threads_each);
        row.status = RowStatus::done;
      } catch (const std::exception& e) {
        row.status = RowStatus::failed;
        row.error = e.what();
      }
      std::lock_guard lock(mu);
      out << row_json(row).dump() << '\n';
      out.flush();
      if (!out) {
        io_failed = true;
        return;
      }
      result.rows[row.run.key()] = row;
      if (options.on_row) options.on_row(row);
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (io_failed) throw SweepError("writing '" + path + "' failed");
  return result;
}

SweepResult load_results(const std::string& dir) { return replay(dir).result; }

void write_sweep_csv(const SweepResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SweepError("cannot write '" + path + "'");
  out << report_csv_header() << '\n';
  for (const auto* row : result.done_rows()) out << report_csv_row(*row->report) << '\n';
  out.flush();
  if (!out) throw SweepError("failed writing '" + path + "'");
}

std::vector<std::string> builtin_sweep_ids() {
  std::vector<std::string> ids = {"snt_alone"};
  for (int c = 1; c <= 4; ++c) {
    for (int p = 1; p <= 3; ++p) ids.push_back("case" + std::to_string(c) + "_p" + std::to_string(p) + "_d");
  }
  ids.insert(ids.end(), {"case3_p2_bD", "case4_p2_bD", "case5_a", "case6_d", "case7_d", "case6_bD", "case7_bD"});
  return ids;
}

SweepSpec builtin_sweep(const std::string& id, const std::string& preset) {
  SweepSpec s;
  s.id = id;
  s.preset = preset;
  const auto tip_orient = std::vector<Orientation>{Orientation::radial, Orientation::axial};
  const auto wire_orient = std::vector<Orientation>{Orientation::radial, Orientation::azimuthal, Orientation::axial};
  auto orient_for = [&](const CaseGeometry& g) {
    return g.secondary == SecondaryKind::wire ? wire_orient : tip_orient;
  };
  if (id == "snt_alone") {
    s.base = builtin_geometry("snt_alone_p2");
    s.base.case_id = "snt_alone";
    s.axis = SweepAxis::a;
    s.values = {0.2, 0.43, 0.71};
    s.orientations = tip_orient;
    return s;
  }
  if (id == "case5_a") {
    s.base = builtin_geometry("case5");
    s.axis = SweepAxis::a;
    s.start = 0.062;
    s.stop = 1.24;
    s.step = 0.062;
    s.orientations = tip_orient;
    return s;
  }
  const bool gap = id.size() > 2 && id.compare(id.size() - 2, 2, "_d") == 0;
  const bool radius = id.size() > 3 && id.compare(id.size() - 3, 3, "_bD") == 0;
  if (gap || radius) {
    const std::string base_name = id.substr(0, id.size() - (gap ? 2 : 3));
    CaseGeometry g;
    try {
      g = builtin_geometry(base_name);
    } catch (const ConfigurationError&) {
      throw SweepError("unknown built-in sweep '" + id + "'");
    }
    if (g.secondary == SecondaryKind::none) throw SweepError("unknown built-in sweep '" + id + "'");
    if (radius && base_name != "case3_p2" && base_name != "case4_p2" && base_name != "case6" &&
        base_name != "case7") {
      throw SweepError("unknown built-in sweep '" + id + "'");
    }
    s.base = g;
    s.orientations = orient_for(g);
    if (gap) {
      s.axis = SweepAxis::d;
      s.start = 0.05;
      s.stop = 0.5;
      s.step = 0.02;
      if (base_name == "case3_p2" || base_name == "case4_p2" || base_name == "case6" || base_name == "case7") {
        s.chain = ChainedStage{base_name + "_bD", 0.05, 0.8, 0.05, Orientation::radial};
      }
    } else {
      s.axis = SweepAxis::b_d;
      s.start = 0.05;
      s.stop = 0.8;
      s.step = 0.05;
    }
    return s;
  }
  throw SweepError("unknown built-in sweep '" + id + "'");
}

}  // namespace nanotip
