#include "ivbandit/estimators.hpp"

#include <cmath>
#include <cstdio>

#include "ivbandit/errors.hpp"

namespace ivb {

namespace {

// Square linear solve with an explicit invertibility gate so callers see
// SingularDesign instead of silent garbage.
Vector solve_square(const Matrix& M, const Vector& b, const char* who) {
  Eigen::FullPivLU<Matrix> lu(M);
  lu.setThreshold(1e-10);
  if (!lu.isInvertible()) throw SingularDesign(std::string(who) + ": singular system");
  return lu.solve(b);
}

double sigma_min_sym(const Matrix& A) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(A, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

void check_dataset(const Dataset& data) {
  if (data.Z.rows() < 1 || data.Z.rows() != data.X.rows() || data.Z.rows() != data.Y.size() ||
      data.Z.cols() != data.X.cols())
    throw DimensionMismatch("dataset: inconsistent shapes");
}

}  // namespace

SuffStats& SuffStats::operator+=(const SuffStats& o) {
  if (ZtZ.size() == 0) {
    *this = o;
    return *this;
  }
  if (o.ZtZ.size() == 0) return *this;
  if (o.ZtZ.rows() != ZtZ.rows()) throw DimensionMismatch("suffstats: dimension mismatch");
  T += o.T;
  ZtZ += o.ZtZ;
  ZtX += o.ZtX;
  ZtY += o.ZtY;
  max_row_norm = std::max(max_row_norm, o.max_row_norm);
  return *this;
}

SuffStats stats_from(const Dataset& data) {
  check_dataset(data);
  SuffStats s(int(data.Z.cols()));
  s.T = data.Z.rows();
  s.ZtZ = data.Z.transpose() * data.Z;
  s.ZtX = data.Z.transpose() * data.X;
  s.ZtY = data.Z.transpose() * data.Y;
  s.max_row_norm = std::sqrt(data.Z.rowwise().squaredNorm().maxCoeff());
  return s;
}

void validate_bounds(const NoiseBounds& bounds) {
  if (bounds.L_nu <= 0 || bounds.L_eta <= 0 || bounds.theta_norm_bound < 0)
    throw BadParam("noise bounds must be positive");
  const double implied = 2.0 * (bounds.L_eta * bounds.theta_norm_bound * bounds.theta_norm_bound + 1.0);
  if (bounds.L_nu < implied)
    std::fprintf(stderr, "warning: L_nu=%g below the variance identity value %g\n", bounds.L_nu,
                 implied);
}

Matrix fit_gamma_ols(const SuffStats& stats) {
  if (sigma_min_sym(stats.ZtZ) <= 1e-10)
    throw SingularDesign("fit_gamma_ols: Z^T Z near-singular");
  return solve_psd(stats.ZtZ, stats.ZtX);
}

Matrix fit_gamma_ols(const Dataset& data) { return fit_gamma_ols(stats_from(data)); }

Vector estimate_theta_psi(const SuffStats& stats, const Matrix& psi) {
  if (psi.rows() != stats.ZtZ.rows() || psi.cols() != stats.ZtZ.cols())
    throw DimensionMismatch("estimate_theta_psi: psi shape");
  return solve_square(stats.ZtZ * psi, stats.ZtY, "estimate_theta_psi");
}

Vector estimate_theta_psi(const Dataset& data, const Matrix& psi) {
  return estimate_theta_psi(stats_from(data), psi);
}

Vector estimate_theta_2sls(const SuffStats& stats) {
  return solve_square(stats.ZtX, stats.ZtY, "estimate_theta_2sls");
}

Vector estimate_theta_2sls(const Dataset& data) { return estimate_theta_2sls(stats_from(data)); }

double sigma_nu_bound(const NoiseBounds& bounds, bool compliance) {
  const double l_eta = compliance ? 4.0 : bounds.L_eta;
  const double b = bounds.theta_norm_bound;
  return 2.0 * (l_eta * b * b + 1.0);
}

double derived_theta_norm_bound(double L_nu, double L_eta) {
  if (L_eta <= 0.0) throw BadParam("derived_theta_norm_bound: L_eta must be positive");
  const double v = (L_nu / 2.0 - 1.0) / L_eta;
  if (v < 0.0) throw BadParam("derived_theta_norm_bound: L_nu below the noise floor 2");
  return std::sqrt(v);
}

double log_bar_stats(long long T, double sigma_min_ztz, double delta, int d, double L_z,
                     LogBarMode mode) {
  if (mode == LogBarMode::Practical) return 4.0 * d + std::log(1.0 / delta);
  const double m = std::min(2.0, std::max(sigma_min_ztz, 1e-12));
  const double first = 8.0 * d * std::log(1.0 + 2.0 * double(T) * L_z * L_z / (d * m));
  const double l2 = std::log2(4.0 / m);
  const double second = 16.0 * std::log((2.0 * std::pow(6.0, d) / delta) * l2 * l2);
  return first + second;
}

double log_bar(const Matrix& Z, double delta, int d, double L_z, LogBarMode mode) {
  if (mode == LogBarMode::Practical) return 4.0 * d + std::log(1.0 / delta);
  return log_bar_stats(Z.rows(), sigma_min_sym(Z.transpose() * Z), delta, d, L_z, mode);
}

Matrix abar(const SuffStats& stats, const Matrix& gamma) {
  return gamma.transpose() * stats.ZtZ * gamma;
}

namespace {

double mahal_or_singular(const Vector& w, const Matrix& A, const char* who) {
  if (sigma_min_sym(A) <= 1e-12) throw SingularDesign(std::string(who) + ": Abar not PD");
  try {
    return mahalanobis_sq(w, A);
  } catch (const NotPSD&) {
    throw SingularDesign(std::string(who) + ": Abar not PD");
  }
}

}  // namespace

double oracle_ci_width(const Vector& w, const Matrix& Z, const Matrix& gamma, double sigma_nu_sq,
                       double delta) {
  const Matrix A = gamma.transpose() * (Z.transpose() * Z) * gamma;
  const double m = mahal_or_singular(w, A, "oracle_ci_width");
  return std::sqrt(2.0 * sigma_nu_sq * m * std::log(2.0 / delta));
}

double p2sls_ci_width(const Vector& w, const Matrix& Z1, const Matrix& Z2, const Matrix& gamma_hat,
                      const NoiseBounds& bounds, double delta, LogBarMode mode) {
  const int d = int(Z1.cols());
  const Matrix A1 = gamma_hat.transpose() * (Z1.transpose() * Z1) * gamma_hat;
  const Matrix A2 = gamma_hat.transpose() * (Z2.transpose() * Z2) * gamma_hat;
  const double m2 = mahal_or_singular(w, A2, "p2sls_ci_width");
  const double sampling = std::sqrt(2.0 * bounds.L_nu * m2 * std::log(4.0 / delta));
  if (bounds.theta_norm_bound == 0.0) return sampling;
  const double m1 = mahal_or_singular(w, A1, "p2sls_ci_width");
  const double L_z = std::sqrt(Z1.rowwise().squaredNorm().maxCoeff());
  const double lb = log_bar(Z1, delta / 4.0, d, L_z, mode);
  return sampling + std::sqrt(m1) * bounds.theta_norm_bound * std::sqrt(bounds.L_eta * lb);
}

}  // namespace ivb
