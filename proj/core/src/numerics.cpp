#include "ivbandit/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "ivbandit/errors.hpp"

namespace ivb {

namespace {

Eigen::LLT<Matrix> factor_psd(const Matrix& A) {
  const auto d = A.rows();
  if (A.cols() != d) throw DimensionMismatch("solve_psd: matrix not square");
  const double scale = std::max(1.0, A.lpNorm<Eigen::Infinity>());
  if ((A - A.transpose()).lpNorm<Eigen::Infinity>() > 1e-9 * scale)
    throw NotPSD("solve_psd: matrix not symmetric to 1e-9");

  Eigen::LLT<Matrix> llt(A);
  if (llt.info() == Eigen::Success) return llt;

  // One jitter retry only; beyond that, fail loudly rather than bias results.
  const double jitter = 1e-12 * A.trace() / double(d);
  Matrix Aj = A + jitter * Matrix::Identity(d, d);
  llt.compute(Aj);
  if (llt.info() != Eigen::Success) throw NotPSD("solve_psd: factorization failed after jitter");
  return llt;
}

}  // namespace

Matrix solve_psd(const Matrix& A, const Matrix& B) {
  if (B.rows() != A.rows()) throw DimensionMismatch("solve_psd: rhs rows mismatch");
  const auto llt = factor_psd(A);
  Matrix X = llt.solve(B);
  X += llt.solve(B - A * X);  // one refinement step tightens the residual
  return X;
}

Vector solve_psd(const Matrix& A, const Vector& b) {
  Matrix X = solve_psd(A, Matrix(b));
  return Vector(X.col(0));
}

double mahalanobis_sq(const Vector& v, const Matrix& A) {
  if (v.size() != A.rows()) throw DimensionMismatch("mahalanobis_sq: dim mismatch");
  const Vector x = solve_psd(A, v);
  return std::max(0.0, v.dot(x));
}

std::pair<double, double> extreme_singular_values(const Matrix& A) {
  Matrix G = A.transpose() * A;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(G);
  const auto& ev = eig.eigenvalues();
  const double lo = std::sqrt(std::max(0.0, ev.minCoeff()));
  const double hi = std::sqrt(std::max(0.0, ev.maxCoeff()));
  return {lo, hi};
}

}  // namespace ivb
