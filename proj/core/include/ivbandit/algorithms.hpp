#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ivbandit/design.hpp"
#include "ivbandit/estimators.hpp"
#include "ivbandit/instances.hpp"
#include "ivbandit/rng.hpp"

namespace ivb {

// Run-wide knobs shared by every adaptive procedure.
struct AlgoParams {
  double delta = 0.1;
  double omega = 1.0;
  NoiseBounds bounds;
  double gamma_min = 0.0;  // known lower bound on sigma_min(gamma); unknown-gamma runs only
  double g = 144.0;        // doubling-trick constant from the analysis (72 * 2)
  LogBarMode log_mode = LogBarMode::Practical;
  int max_phases = 40;                           // also caps doubling iterations
  long long max_total_samples = 1'000'000'000'000'000LL;
  SamplingPolicy sampling = SamplingPolicy::Auto;
  SolverOptions solver;
};

enum class PhaseKind { ThetaPhase, GammaPhase, WarmUp };

struct PhaseRecord {
  int k = 0;
  double zeta = 0.0;
  std::vector<int> active_set;  // indices into W at phase start, ascending
  Design design;                // allocation sampled this phase (theta side or E/XY mix)
  long long N = 0;              // rounds drawn this phase, all sources
  Matrix estimate;              // theta_hat as a d x 1 column, or gamma_hat
  PhaseKind kind = PhaseKind::ThetaPhase;
};

struct TrialResult {
  std::string algorithm;
  int recommended = -1;
  bool correct = false;
  long long total_samples = 0;  // equals the sum of phase N's
  std::vector<PhaseRecord> phases;
};

// Drops every active arm beaten by some active arm by more than threshold;
// the empirical argmax always survives. Returns ascending indices into W.
std::vector<int> eliminate(const std::vector<int>& active, const Vector& theta_hat,
                           const std::vector<Vector>& W, double threshold);

// Phased elimination with the first stage known: per phase, pair allocation on
// the active set, N_k = ceil(2(1+w) zeta^-2 rho L_nu log(4k^2|W|/delta)) v r(w),
// estimate through the known first stage, eliminate at 2^-k.
TrialResult run_cpeg(const ProblemInstance& env, const AlgoParams& params, Rng& rng);

struct ThetaEstimate {
  Vector theta_hat;
  long long N2 = 0;
  Design design;
};

// One-shot estimate through a plug-in first stage: allocates with gamma_hat,
// draws N2 = ceil(2(1+w) zeta^-2 rho L_nu log(4|active|/delta)) v r(w) fresh
// rounds, returns the sandwich solve on those rounds only.
ThetaEstimate theta_estimator(const ProblemInstance& env, const std::vector<int>& active,
                              double delta, double zeta, const Matrix& gamma_hat,
                              const AlgoParams& params, Rng& rng);

struct GammaEstimate {
  Matrix gamma_hat;
  Design design;  // pair design when a prior estimate exists, else the spread design
  long long samples_used = 0;
  int ell_final = 0;             // doubling iterations completed
  std::vector<long long> N0;     // cumulative spread-design rows per iteration
  std::vector<long long> N1;     // fresh pair-design batch per iteration (empty first call)
  double stop_value = 0.0;       // stopping statistic at exit
};

// First-stage estimate to accuracy zeta by the doubling trick. With no prior
// estimate: spread-design batches 2^(l-1)(r(w) v ceil(2/kappa0)), accumulated,
// until the stopping statistic falls to 1. With a prior estimate: per
// iteration a fresh pair-design batch N1 = 2^l N' plus a cumulative top-up of
// spread rows to N0_l, refit on spread + latest batch, stop at zeta.
GammaEstimate gamma_estimator(const ProblemInstance& env, const std::vector<int>& active,
                              const std::optional<Matrix>& gamma_prev, double zeta, double delta,
                              const AlgoParams& params, const Design& lambda_E, double kappa0,
                              double M, Rng& rng);

// Phased elimination with the first stage learned on the fly: each phase
// refines gamma_hat to accuracy zeta_k, re-estimates theta through it, and
// eliminates at zeta_k. Schedules delta/k^2 and zeta_k = 2^-k after phase 1.
TrialResult run_cpeug(const ProblemInstance& env, const AlgoParams& params, Rng& rng);

struct PluginTrial {
  TrialResult trial;
  double gamma_slack = 0.0;  // first-stage error allowance computed from offline rows
};

// Elimination with a fixed offline first-stage estimate. The offline rows set
// the slack; phases stop once all empirical gaps are within 4x the slack and
// 2^-k falls below it. The returned arm is good to within 6x the slack.
PluginTrial run_cpeg_plugin(const ProblemInstance& env, const Matrix& gamma_hat_offline,
                            const Matrix& offline_Z, const AlgoParams& params, Rng& rng);

struct WarmUpResult {
  double lcb = 0.0;
  long long samples = 0;
  int doublings = 0;
};

// Anytime lower confidence bound on sigma_min(gamma): spread-design batches
// double until LCB(t) > UCB(t)/2; the terminal LCB lands in
// (sigma_min/2, sigma_min] with probability 1-delta. Instruments with norms
// above one are rescaled internally and the bound mapped back.
WarmUpResult estimate_lambda_min(const ProblemInstance& env, const AlgoParams& params, Rng& rng);

enum class Recommender { OLS, IV };

// Classic optimistic index policy on instrument means (bonus sqrt(2 ln t / n));
// entry t of the trace is the recommender's arm after t+1 pulls. OLS recommends
// the best per-treatment outcome mean; IV deconfounds through the known first
// stage. Requires canonical basis instruments.
std::vector<int> run_ucb_baseline(const ProblemInstance& env, long long horizon, Recommender rec,
                                  Rng& rng);

enum class StaticKind { Oracle, XY, Uniform, SE };

// Phased elimination with the allocation fixed by the named rule instead of
// re-solved on the active set: Oracle pairs the true best arm against the
// rest, XY covers all pairs, Uniform spreads over instruments, SE spreads over
// instruments matching the active arms.
TrialResult run_static_baseline(const ProblemInstance& env, StaticKind kind,
                                const AlgoParams& params, Rng& rng);

}  // namespace ivb
