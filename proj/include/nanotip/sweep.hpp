#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "nanotip/config.hpp"
#include "nanotip/coupling.hpp"

namespace nanotip {

struct SweepError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class SweepAxis { d, b_d, a };

std::string to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(const std::string& text);

/// Second stage chained after a gap sweep: the secondary radius is swept at the
/// gap that maximised eta for `argmax_orientation` in stage 1.
struct ChainedStage {
  std::string id;
  double start = 0.0, stop = 0.0, step = 0.0;
  Orientation argmax_orientation = Orientation::radial;
};

struct SweepSpec {
  std::string id;  ///< names the results subdirectory
  CaseGeometry base;
  SweepAxis axis = SweepAxis::d;
  double start = 0.0, stop = 0.0, step = 0.0;
  std::vector<double> values;  ///< explicit axis values; overrides start/stop/step when non-empty
  std::vector<Orientation> orientations;
  std::string preset = "coarse";
  bool extend = false;  ///< allow axis values outside the studied ranges
  std::optional<ChainedStage> chain;

  std::vector<double> axis_values() const;
};

/// Throws SweepError on empty orientations, bad steps or out-of-range values.
void validate_sweep(const SweepSpec& spec);

nlohmann::json to_json(const SweepSpec& spec);
SweepSpec sweep_from_json(const nlohmann::json& j);

/// FNV-1a over the canonical JSON of a sweep spec.
std::uint64_t spec_hash(const SweepSpec& spec);
std::string spec_hash_hex(const SweepSpec& spec);

struct RunDescriptor {
  double axis_value = 0.0;
  Orientation orientation = Orientation::radial;
  CaseGeometry geometry;
  std::string key() const;
};

/// Axis values ascending, orientations in spec order within each value.
std::vector<RunDescriptor> plan(const SweepSpec& spec);

enum class RowStatus { done, failed, pending };

struct SweepRow {
  RunDescriptor run;
  RowStatus status = RowStatus::pending;
  std::optional<CouplingReport> report;
  std::string error;
};

struct SweepResult {
  SweepSpec spec;
  std::string hash;
  std::map<std::string, SweepRow> rows;  ///< keyed by RunDescriptor::key()

  std::vector<const SweepRow*> done_rows(std::optional<Orientation> orientation = std::nullopt) const;
  bool complete() const;
};

/// Row with the largest eta for one orientation; ties go to the smaller axis value.
std::pair<double, double> argmax(const SweepResult& result, Orientation orientation);

/// Stage-2 spec using the stage-1 argmax gap.
SweepSpec chained_spec(const SweepResult& stage1);

/// Executes one point; swapped out in tests.
using RunFunction = std::function<CouplingReport(const RunDescriptor&, const SweepSpec&, int threads)>;
RunFunction simulation_runner();

struct ExecuteOptions {
  int workers = 1;
  int thread_cap = 1;  ///< total threads across all workers
  std::function<void(const SweepRow&)> on_row;
};

/// Runs every pending point of the plan into `<dir>/results.jsonl`, skipping
/// points already done there. Refuses a results file written for another spec.
SweepResult execute(const SweepSpec& spec, const std::string& dir, const ExecuteOptions& options,
                    const RunFunction& run = simulation_runner());

/// Replays a results file (a torn final line is ignored).
SweepResult load_results(const std::string& dir);

/// Consolidated table in report CSV form, sorted by axis value then orientation.
void write_sweep_csv(const SweepResult& result, const std::string& path);

/// Sweeps of every figure plus the single-structure references, by id.
std::vector<std::string> builtin_sweep_ids();
SweepSpec builtin_sweep(const std::string& id, const std::string& preset = "coarse");

}  // namespace nanotip
