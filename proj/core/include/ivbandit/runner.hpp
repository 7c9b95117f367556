#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ivbandit/config.hpp"

namespace ivb {

// One Monte-Carlo trial. recommended == -1 flags a trial stopped by a safety
// cap. wall_ms is pinned to zero so reruns are byte-identical.
struct ResultRow {
  std::string instance_id;
  std::string algorithm;
  int trial = 0;
  std::uint64_t seed = 0;
  long long samples = 0;
  bool correct = false;
  int recommended = -1;
  long long wall_ms = 0;
};

struct ResultsTable {
  std::vector<ResultRow> rows;
};

// success_at[i] = fraction of trials whose running recommendation is correct
// after (i+1)*step samples; produced for the per-step baselines.
struct SuccessCurve {
  std::string algorithm;
  long long step = 1;
  std::vector<double> success_at;
};

// Optional per-run extras: one JSON object per phase (plus one per whole
// per-step trial), and the success curves for the horizon plot.
struct RunArtifacts {
  std::vector<std::string> trace_lines;
  std::vector<SuccessCurve> curves;
};

std::uint64_t trial_seed(std::uint64_t master, const std::string& instance_id,
                         const std::string& algorithm, int trial);

// Deterministic given the config: identical rows for any worker count. Trials
// fan out over a work queue; a capped trial becomes a flagged row, never an
// aborted sweep.
ResultsTable run_experiment(const ExperimentConfig& cfg, int workers = 1,
                            RunArtifacts* artifacts = nullptr);

// Fixed column contract: instance_id,algorithm,trial,seed,samples,correct,
// recommended,wall_ms. correct serializes as 0/1.
std::string results_csv(const ResultsTable& table);
ResultsTable parse_results_csv(const std::string& text);

// {algorithm: {mean_samples, std_samples, success_rate, n}}; keys are
// "instance_id/algorithm" when the table spans several instances.
std::string summary_json(const ResultsTable& table);

// results.csv + summary.json, plus trace.jsonl and the SVG plots when asked.
void write_outputs(const ResultsTable& table, const std::string& dir,
                   const RunArtifacts* artifacts = nullptr, bool emit_svg = false);

}  // namespace ivb
