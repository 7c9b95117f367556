#pragma once

#include <cstdint>

#include "ivbandit/numerics.hpp"

namespace ivb {

// Explicit-row sample (Z_T, X_T, Y_T), rows are observations.
struct Dataset {
  Matrix Z;  // T x d instruments
  Matrix X;  // T x d treatments
  Vector Y;  // T outcomes
};

// Accumulated cross-products; all estimators and stopping rules in this
// codebase are functions of these, so adaptive runs never store rows.
struct SuffStats {
  long long T = 0;
  Matrix ZtZ, ZtX;
  Vector ZtY;
  double max_row_norm = 0.0;  // max ||z_t||_2 over accumulated rows

  SuffStats() = default;
  explicit SuffStats(int d)
      : ZtZ(Matrix::Zero(d, d)), ZtX(Matrix::Zero(d, d)), ZtY(Vector::Zero(d)) {}

  SuffStats& operator+=(const SuffStats& o);
};

SuffStats stats_from(const Dataset& data);

// Sub-Gaussian bookkeeping: L_nu >= sigma_nu^2, L_eta >= sigma_eta^2,
// theta_norm_bound >= ||theta||_2.
struct NoiseBounds {
  double L_nu = 0.0;
  double L_eta = 0.0;
  double theta_norm_bound = 0.0;
};

enum class LogBarMode { Theoretical, Practical };

// Warns (once per call site semantics: every call) if L_nu is inconsistent
// with the noise-variance identity L_nu >= 2(L_eta*B^2 + 1).
void validate_bounds(const NoiseBounds& bounds);

// First-stage least squares: (Z^T Z)^{-1} Z^T X.
Matrix fit_gamma_ols(const Dataset& data);
Matrix fit_gamma_ols(const SuffStats& stats);

// Psi-IV family: (Z^T Z Psi)^{-1} Z^T Y. Psi=I is OLS, Psi=Gamma the oracle,
// Psi=Gamma_hat from an independent first stage is P-2SLS.
Vector estimate_theta_psi(const Dataset& data, const Matrix& psi);
Vector estimate_theta_psi(const SuffStats& stats, const Matrix& psi);

// Standard 2SLS point estimate: (Z^T X)^{-1} Z^T Y. No CI.
Vector estimate_theta_2sls(const Dataset& data);
Vector estimate_theta_2sls(const SuffStats& stats);

// 2(L_eta*B^2+1) generally; the categorical-compliance case pins L_eta to 4.
double sigma_nu_bound(const NoiseBounds& bounds, bool compliance);

// Inverts the variance identity when only (L_nu, L_eta) are known.
double derived_theta_norm_bound(double L_nu, double L_eta);

// Self-normalized log factor. Theoretical mode evaluates the displayed
// expression on the realized integer design; Practical mode is 4d + ln(1/delta).
double log_bar(const Matrix& Z, double delta, int d, double L_z, LogBarMode mode);
double log_bar_stats(long long T, double sigma_min_ztz, double delta, int d, double L_z,
                     LogBarMode mode);

// Gamma^T Z^T Z Gamma.
Matrix abar(const SuffStats& stats, const Matrix& gamma);

// Half-width of the oracle (known-Gamma) interval for w^T theta.
double oracle_ci_width(const Vector& w, const Matrix& Z, const Matrix& gamma,
                       double sigma_nu_sq, double delta);

// P-2SLS width: sampling term on the second stage plus the Gamma-approximation
// term on the (independent) first stage. L_z is taken from the Z1 rows.
double p2sls_ci_width(const Vector& w, const Matrix& Z1, const Matrix& Z2,
                      const Matrix& gamma_hat, const NoiseBounds& bounds, double delta,
                      LogBarMode mode);

}  // namespace ivb
