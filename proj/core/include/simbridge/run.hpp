#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "simbridge/agent.hpp"
#include "simbridge/config.hpp"

namespace simbridge {

// Overrides the root that relative out_dir paths resolve against.
inline constexpr const char* kOutRootEnvVar = "SIMBRIDGE_OUT_ROOT";

std::string resolve_out_dir(const std::string& out_dir);

struct RunResult {
  std::string run_dir;
  double final_score = 0.0;
};

// Executes one training run. The run directory afterwards contains exactly:
// config.txt (resolved snapshot), metrics.jsonl, checkpoint/, DONE.
// A directory that already carries a completion marker is returned as-is.
RunResult run_training(const RunConfig& cfg);

bool run_is_complete(const std::string& run_dir);

// Loads the checkpointed policy of a completed run and evaluates it in the
// reference environment of the run's task.
EvalResult evaluate_run(const std::string& run_dir, int episodes,
                        std::uint64_t seed);

// axis in {lambda, ratio, gravity, backbone}; values are textual cell
// values (e.g. "0.1", "off", "2.0", "sql").
struct AblationGrid {
  std::string axis;
  std::vector<std::string> values;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
};

// Applies one axis value to a base config; label becomes "<axis>=<value>".
RunConfig apply_axis_value(const RunConfig& base, const std::string& axis,
                           const std::string& value);

struct CellSummary {
  std::string label;
  double mean = 0.0;
  double stddev = 0.0;  // population std across seeds
  int n = 0;            // completed runs aggregated
};

// Runs |values| x |seeds| cells under out_root (completed cells are skipped),
// optionally in parallel, then summarizes in grid order.
std::vector<CellSummary> run_ablation(const RunConfig& base,
                                      const AblationGrid& grid,
                                      const std::string& out_root, int jobs);

// Aggregates final scores per labelled cell; an empty cell yields n = 0 with
// NaN statistics rather than an error.
std::vector<CellSummary> summarize_cells(
    const std::vector<std::pair<std::string, std::vector<std::string>>>&
        cells);

// Groups completed run directories by their config label (directories with
// empty labels are grouped by config hash) and summarizes. First-seen order.
std::vector<CellSummary> summarize_run_dirs(
    const std::vector<std::string>& run_dirs);

// CSV "cell,mean,std,n"; empty cells are flagged with NA fields.
void write_summary_csv(const std::vector<CellSummary>& cells,
                       const std::string& path);
std::string summary_csv(const std::vector<CellSummary>& cells);

}  // namespace simbridge
