#include "nanotip/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>
#include <tuple>

namespace nanotip {

namespace fs = std::filesystem;

namespace {

const double kPRadius[3] = {0.20, 0.43, 0.71};

std::string axis_suffix(SweepAxis a) {
  switch (a) {
    case SweepAxis::d: return "d";
    case SweepAxis::b_d: return "bD";
    case SweepAxis::a: return "a";
  }
  return "d";
}

bool matches(const StoredSweep& s, const SweepGroup& g, const std::string& preset) {
  return s.result.spec.base.case_id == g.case_id && s.result.spec.axis == g.axis && s.result.spec.preset == preset;
}

std::vector<const SweepRow*> group_rows(const std::vector<StoredSweep>& sweeps, const SweepGroup& g,
                                        const std::string& preset, std::optional<Orientation> o) {
  // Earlier directories win when two sweeps cover the same point.
  std::map<std::string, const SweepRow*> by_key;
  for (const auto& s : sweeps) {
    if (!matches(s, g, preset)) continue;
    for (const auto* r : s.result.done_rows(o)) by_key.emplace(r->run.key(), r);
  }
  std::vector<const SweepRow*> out;
  for (const auto& [k, r] : by_key) out.push_back(r);
  std::sort(out.begin(), out.end(), [](const SweepRow* a, const SweepRow* b) {
    return std::tie(a->run.axis_value, a->run.orientation) < std::tie(b->run.axis_value, b->run.orientation);
  });
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

std::string builtin_sweep_for(const SweepGroup& g) {
  if (g.case_id == "snt_alone" && g.axis == SweepAxis::a) return "snt_alone";
  return g.case_id + "_" + axis_suffix(g.axis);
}

const std::vector<FigureDef>& figure_defs() {
  static const std::vector<FigureDef> defs = [] {
    std::vector<FigureDef> d;
    const char* letters = "abcdef";
    int n = 0;
    for (int p = 1; p <= 3; ++p) {
      for (int pair = 0; pair < 2; ++pair) {
        // a/c/e: silica partners (cases 1, 2); b/d/f: diamond partners (cases 3, 4).
        const int c1 = pair == 0 ? 1 : 3;
        const std::string ps = "_p" + std::to_string(p);
        d.push_back({std::string("fig2") + letters[n++],
                     "gap sweeps at P" + std::to_string(p) + (pair == 0 ? ", silica partners" : ", diamond partners"),
                     {{"case" + std::to_string(c1) + ps, SweepAxis::d},
                      {"case" + std::to_string(c1 + 1) + ps, SweepAxis::d}}});
      }
    }
    d.push_back({"fig3a", "DNT2 radius sweep beside the P2 silica tip", {{"case3_p2", SweepAxis::b_d}}});
    d.push_back({"fig3b", "DNW radius sweep beside the P2 silica tip", {{"case4_p2", SweepAxis::b_d}}});
    d.push_back({"fig4a", "diamond tip alone, radius sweep", {{"case5", SweepAxis::a}}});
    d.push_back({"fig4b", "gap sweeps of the diamond pairs", {{"case6", SweepAxis::d}, {"case7", SweepAxis::d}}});
    d.push_back({"fig4c", "DNT2 radius sweep beside DNT1", {{"case6", SweepAxis::b_d}}});
    d.push_back({"fig4d", "DNW radius sweep beside DNT1", {{"case7", SweepAxis::b_d}}});
    return d;
  }();
  return defs;
}

const FigureDef& figure_def(const std::string& id) {
  for (const auto& f : figure_defs()) {
    if (f.id == id) return f;
  }
  std::string known;
  for (const auto& f : figure_defs()) known += (known.empty() ? "" : ", ") + f.id;
  throw ConfigurationError("unknown figure '" + id + "' (known: " + known + ")");
}

std::vector<StoredSweep> scan_results(const std::string& root, std::vector<std::string>* errors) {
  std::vector<StoredSweep> out;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) return out;
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root, ec)) {
    if (entry.is_directory() && fs::exists(entry.path() / "results.jsonl")) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    try {
      out.push_back({d.string(), load_results(d.string())});
    } catch (const std::exception& e) {
      if (errors) errors->push_back(d.string() + ": " + e.what());
    }
  }
  return out;
}

std::vector<FigureRow> figure_rows(const std::vector<StoredSweep>& sweeps, const FigureDef& figure,
                                   const std::string& preset) {
  std::vector<FigureRow> rows;
  std::vector<std::string> missing;
  for (const auto& g : figure.groups) {
    const auto src = group_rows(sweeps, g, preset, std::nullopt);
    if (src.empty()) {
      missing.push_back(builtin_sweep_for(g));
      continue;
    }
    for (const auto* r : src) {
      rows.push_back({g.case_id, r->run.axis_value, r->run.orientation, r->report->eta_flux, r->report->eta_modal,
                      r->report->converged});
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw MissingInputs(figure.id + " needs sweeps not found at preset " + preset + ": " + list, missing);
  }
  return rows;
}

std::string figure_csv(const std::vector<FigureRow>& rows) {
  std::string out = "case,axis_value_um,orientation,eta,eta_modal,converged\n";
  for (const auto& r : rows) {
    out += r.case_id + "," + format_sig6(r.axis_value) + "," + to_string(r.orientation) + "," + format_sig6(r.eta) +
           "," + format_sig6(r.eta_modal) + "," + (r.converged ? "true" : "false") + "\n";
  }
  return out;
}

std::vector<FigureRow> parse_figure_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "case,axis_value_um,orientation,eta,eta_modal,converged") {
    throw ConfigurationError("figure CSV has an unexpected header");
  }
  std::vector<FigureRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 6) throw ConfigurationError("figure CSV row has " + std::to_string(f.size()) + " fields");
    FigureRow r;
    r.case_id = f[0];
    r.axis_value = std::stod(f[1]);
    r.orientation = parse_orientation(f[2]);
    r.eta = std::stod(f[3]);
    r.eta_modal = std::stod(f[4]);
    if (f[5] != "true" && f[5] != "false") throw ConfigurationError("converged must be true or false");
    r.converged = f[5] == "true";
    rows.push_back(r);
  }
  return rows;
}

std::vector<TableEntry> summary_table(const std::vector<StoredSweep>& sweeps, const std::string& preset,
                                      Orientation orientation) {
  std::vector<TableEntry> table;
  {
    const SweepGroup g{"snt_alone", SweepAxis::a};
    const auto rows = group_rows(sweeps, g, preset, orientation);
    for (int p = 0; p < 3; ++p) {
      TableEntry e{"SNT alone", "P" + std::to_string(p + 1), g, kPRadius[p], std::nullopt};
      for (const auto* r : rows) {
        if (std::abs(r->run.axis_value - kPRadius[p]) < 1e-6) e.eta = r->report->eta_flux;
      }
      table.push_back(e);
    }
  }
  auto best = [&](const std::string& row, const std::string& col, const SweepGroup& g) {
    TableEntry e{row, col, g, std::nullopt, std::nullopt};
    const auto rows = group_rows(sweeps, g, preset, orientation);
    for (const auto* r : rows) {
      if (!e.eta || r->report->eta_flux > *e.eta) {
        e.eta = r->report->eta_flux;
        e.axis_value = r->run.axis_value;
      }
    }
    table.push_back(e);
  };
  for (int c = 1; c <= 4; ++c) {
    for (int p = 1; p <= 3; ++p) {
      best("Case " + std::to_string(c), "P" + std::to_string(p),
           {"case" + std::to_string(c) + "_p" + std::to_string(p), SweepAxis::d});
    }
  }
  best("Case 5", "-", {"case5", SweepAxis::a});
  best("Case 6", "-", {"case6", SweepAxis::d});
  best("Case 7", "-", {"case7", SweepAxis::d});
  return table;
}

std::string format_summary(const std::vector<TableEntry>& table) {
  std::ostringstream out;
  out << "row        col  axis       value      eta\n";
  for (const auto& e : table) {
    char head[64];
    std::snprintf(head, sizeof head, "%-10s %-4s %-10s ", e.row.c_str(), e.column.c_str(),
                  to_string(e.source.axis).c_str());
    out << head;
    if (e.eta) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%-10s %s", e.axis_value ? format_sig6(*e.axis_value).c_str() : "-",
                    format_sig6(*e.eta).c_str());
      out << buf;
    } else {
      out << "missing    (sweep " << builtin_sweep_for(e.source) << ")";
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace nanotip
