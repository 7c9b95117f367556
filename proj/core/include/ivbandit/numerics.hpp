#pragma once

#include <utility>

#include <Eigen/Dense>

namespace ivb {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Solves Ax=b for symmetric PSD A via Cholesky with one jitter retry
// (1e-12*trace(A)/d on the diagonal), then one iterative-refinement step.
// Residual contract: ||Ax-b||_inf <= 1e-8*(1+||b||_inf).
Vector solve_psd(const Matrix& A, const Vector& b);
Matrix solve_psd(const Matrix& A, const Matrix& B);

// v^T A^{-1} v for symmetric PD A; zero iff v is zero.
double mahalanobis_sq(const Vector& v, const Matrix& A);

// (sigma_min, sigma_max) via eigendecomposition of A^T A (instances are tiny).
std::pair<double, double> extreme_singular_values(const Matrix& A);

}  // namespace ivb
