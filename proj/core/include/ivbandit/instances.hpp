#pragma once

#include <string>
#include <vector>

#include "ivbandit/estimators.hpp"
#include "ivbandit/numerics.hpp"
#include "ivbandit/rng.hpp"

namespace ivb {

enum class NoiseKind { ComplianceCategorical, JumpAround, InterpolationUnitNoise, GaussianExogenous };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::ComplianceCategorical;
  double sigma_u = 0.0;       // JumpAround preference-noise scale
  double noise_scale = 0.4;   // ComplianceCategorical / InterpolationUnitNoise
  double sigma_eps = 1.0;     // GaussianExogenous
  double sigma_eta_sq = 4.0;  // sub-Gaussian bound for the compliance noise
  double L_eta = 4.0;         // algorithm-facing bound, >= sigma_eta_sq
};

struct Observation {
  Vector z, x;
  double y = 0.0;
};

// Precomputed per-(instrument, treatment) tables enabling exact batched
// sampling of per-arm sums when arms are the standard basis.
struct BatchTables {
  bool canonical = false;  // Z == (e_1, ..., e_d) in order
  Matrix cond;             // cond(i,j) = P(x = e_j | z = e_i)
  Matrix eta_sq;           // ||e_j - E[x|z=e_i]||_2^2
  Matrix u_lo, u_hi;       // JumpAround: u-interval selecting treatment j
  Matrix u_mu, u_var;      // JumpAround: truncated-normal cell moments
};

struct ProblemInstance {
  std::vector<Vector> Z;  // measurement (instrument) vectors
  std::vector<Vector> W;  // evaluation vectors
  int X_dim = 0;          // d
  Matrix gamma;           // structural: E[x|z] = gamma^T z
  Vector theta;
  NoiseSpec noise;
  double L_z = 1.0;
  std::string id;
  BatchTables batch;
};

// gamma_colstoch(i,j) = P(x=e_i | z=e_j); columns must sum to 1. Stored
// internally transposed so every formula uses the structural orientation.
ProblemInstance make_compliance(const Matrix& gamma_colstoch, const Vector& theta,
                                const NoiseSpec& coupling);

// Incentive I, preference noise u ~ N(0, sigma_u^2), treatment J = nearest
// index to I+u (ties to the lower index, ends clamped); y = theta_J + u.
ProblemInstance make_jump_around(int d, const Vector& theta, double sigma_u);

// Gamma = ((1-eps)/d) 11^T + eps I with outcome noise noise_scale * eta^T v,
// v a uniformly random unit vector.
ProblemInstance make_interpolation(int d, const Vector& theta, double eps,
                                   double noise_scale = 0.4);

Observation sample_round(const ProblemInstance& inst, int z_index, Rng& rng);

struct BestArm {
  int index = 0;
  Vector gaps;  // <w* - w, theta> per evaluation arm
  double delta_min = 0.0;
};
BestArm best_arm(const ProblemInstance& inst);

enum class SamplingPolicy { Auto, Exact };

// Draws `counts[i]` rounds of arm i and accumulates cross-products. In Auto
// mode, large per-arm batches on canonical instances draw exact multinomial
// treatment counts and normal-approximate within-cell noise sums (exact
// mean/variance per cell); small batches and Exact mode loop per draw.
SuffStats collect_rounds(const ProblemInstance& inst, const std::vector<long long>& counts,
                         Rng& rng, SamplingPolicy policy = SamplingPolicy::Auto);

// Conditional outcome moments per instrument, from the closed-form tables:
// mean_i = E[y | z=e_i], var_i = Var(y | z=e_i). Used by tests and plots.
void conditional_outcome_moments(const ProblemInstance& inst, Vector& mean, Vector& var);

}  // namespace ivb
