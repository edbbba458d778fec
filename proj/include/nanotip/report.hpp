#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nanotip/sweep.hpp"

namespace nanotip {

/// Raised when a figure or table needs sweeps that have not been run.
struct MissingInputs : std::runtime_error {
  MissingInputs(const std::string& what, std::vector<std::string> sweeps)
      : std::runtime_error(what), needed(std::move(sweeps)) {}
  std::vector<std::string> needed;  ///< built-in sweep ids that would supply the data
};

/// Sweeps are matched to figures by their base case and swept axis, so any
/// results directory name works.
struct SweepGroup {
  std::string case_id;
  SweepAxis axis = SweepAxis::d;
};

/// Built-in sweep id that produces a group.
std::string builtin_sweep_for(const SweepGroup& group);

struct FigureDef {
  std::string id;
  std::string title;
  std::vector<SweepGroup> groups;
};

const std::vector<FigureDef>& figure_defs();
/// Throws ConfigurationError for an unknown id.
const FigureDef& figure_def(const std::string& id);

struct StoredSweep {
  std::string dir;
  SweepResult result;
};

/// Every `<root>/<name>/results.jsonl`, sorted by directory name. Unreadable
/// results files are reported through `errors` rather than thrown.
std::vector<StoredSweep> scan_results(const std::string& root, std::vector<std::string>* errors = nullptr);

struct FigureRow {
  std::string case_id;
  double axis_value = 0.0;
  Orientation orientation = Orientation::radial;
  double eta = 0.0;
  double eta_modal = 0.0;
  bool converged = false;
};

/// Done rows of the matching sweeps at `preset`, ordered by case, axis value, orientation.
/// Throws MissingInputs when a group has no done rows.
std::vector<FigureRow> figure_rows(const std::vector<StoredSweep>& sweeps, const FigureDef& figure,
                                   const std::string& preset);

std::string figure_csv(const std::vector<FigureRow>& rows);
std::vector<FigureRow> parse_figure_csv(const std::string& text);

/// One cell of the maximum-efficiency summary: the best radial point of a sweep.
struct TableEntry {
  std::string row;     ///< "SNT alone", "Case 1", ...
  std::string column;  ///< "P1".."P3" or "-"
  SweepGroup source;
  std::optional<double> axis_value;
  std::optional<double> eta;  ///< empty when the sweep is missing
};

std::vector<TableEntry> summary_table(const std::vector<StoredSweep>& sweeps, const std::string& preset,
                                      Orientation orientation = Orientation::radial);
std::string format_summary(const std::vector<TableEntry>& table);

}  // namespace nanotip
