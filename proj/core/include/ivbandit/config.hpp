#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ivbandit/algorithms.hpp"
#include "ivbandit/instances.hpp"

namespace ivb {

// One algorithm entry. Elimination algorithms read `params`; the optimistic
// baselines read `horizon`; the plug-in variant reads `offline_per_arm`.
struct AlgorithmSpec {
  std::string name;
  AlgoParams params;
  long long horizon = 30000;
  long long offline_per_arm = 2500;
};

struct ExperimentConfig {
  std::vector<ProblemInstance> instances;  // resolved at load time, >= 1
  std::vector<AlgorithmSpec> algorithms;   // >= 1, names from known_algorithms()
  int trials = 1;
  std::uint64_t master_seed = 0;
  std::string outputs = "out";
  bool emit_svg = false;
  bool emit_traces = false;
};

// The runner's dispatch contract.
const std::vector<std::string>& known_algorithms();

// Strict JSON schema: any unknown key anywhere raises ValidationError naming
// the offending path. Malformed JSON raises ParseError with the position.
// A path without a readable file is retried with ".json" appended.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_json_text(const std::string& text, const std::string& origin);

// Fills instance-derived defaults into fields the config left unset (zero):
// L_eta from the instance noise, theta_norm_bound = ||theta||, L_nu from the
// noise-variance identity, gamma_min = 0.9 * sigma_min(Gamma) (simulation
// convenience; a deployment would use the warm-up estimate instead).
AlgoParams resolve_params(AlgoParams base, const ProblemInstance& inst);

}  // namespace ivb
