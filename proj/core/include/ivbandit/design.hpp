#pragma once

#include <utility>
#include <vector>

#include "ivbandit/instances.hpp"
#include "ivbandit/numerics.hpp"

namespace ivb {

// Continuous allocation over the arm list; support counts weights above the
// solver clip threshold after renormalization.
struct Design {
  Vector weights;
  double objective_value = 0.0;
  int support_size = 0;
};

struct SolverOptions {
  int max_iters = 5000;
  double rel_tol = 1e-6;
  double clip = 1e-5;
};

// r_of_omega is the minimum rounding budget for the design this accompanies.
struct RoundingParams {
  double omega = 1.0;
  long long r_of_omega = 0;
};

// A(lambda, Gamma) = sum_z lambda_z (Gamma^T z)(Gamma^T z)^T, no stabilization.
Matrix design_info_matrix(const Vector& weights, const std::vector<Vector>& Z,
                          const Matrix& gamma);

// max_i coefs_i * ||pairs_i||^2_{A^{-1}} with a fixed 1e-10 ridge on A so
// rank-deficient supports stay evaluable when every pair lies in their span.
double max_pair_objective(const std::vector<Vector>& pairs, const std::vector<double>& coefs,
                          const Vector& weights, const std::vector<Vector>& Z,
                          const Matrix& gamma);

// Frank-Wolfe minimization of max_pair_objective over the simplex; step
// 2/(t+2), best-iterate tracking, clip + renormalize on exit.
Design weighted_xy_design(const std::vector<Vector>& pairs, const std::vector<double>& coefs,
                          const std::vector<Vector>& Z, const Matrix& gamma,
                          const SolverOptions& opts = {});

// Unweighted pairs (all coefficients 1).
Design xy_design(const std::vector<Vector>& pairs, const std::vector<Vector>& Z,
                 const Matrix& gamma, const SolverOptions& opts = {});

// Maximizes sigma_min(sum_z lambda_z z z^T); returns the design and kappa_0,
// the smallest eigenvalue at the returned weights.
std::pair<Design, double> e_design(const std::vector<Vector>& Z, const SolverOptions& opts = {});

// Efficient apportionment of N samples to the design's support; counts align
// with the full weight vector and every supported arm receives at least one.
std::vector<long long> round_design(const Design& design, long long N,
                                    const RoundingParams& params);

// ceil(2p / omega): smallest N for which rounding keeps the (1+omega) factor.
long long r_min(const Design& design, double omega);

// Hardness: min over designs of max over suboptimal w of
// ||w* - w||^2_{A^{-1}} / (gap(w)^2 v gamma_floor^2).
double rho_star(const ProblemInstance& inst, double gamma_floor, const SolverOptions& opts = {});

// Sample-count floor sigma^2 rho* log(1/delta) / 2 with sigma^2 = v^T Sigma v,
// v = [theta; 1]; a diagnostic printed next to empirical counts.
double oracle_lower_bound_samples(const ProblemInstance& inst, const Matrix& Sigma, double delta,
                                  const SolverOptions& opts = {});

}  // namespace ivb
