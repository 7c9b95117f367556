#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "ivbandit/errors.hpp"
#include "ivbandit/estimators.hpp"
#include "ivbandit/instances.hpp"

using ivb::Dataset;
using ivb::Matrix;
using ivb::Vector;

namespace {

Vector motivating_theta() {
  Vector t(6);
  t << 1, -0.95, 0, 0.45, 0.95, 0.99;
  return t;
}

// Round-robin uniform pulls, explicit rows.
Dataset sample_uniform(const ivb::ProblemInstance& inst, int T, ivb::Rng& rng) {
  const int d = inst.X_dim;
  Dataset data;
  data.Z = Matrix::Zero(T, d);
  data.X = Matrix::Zero(T, d);
  data.Y = Vector::Zero(T);
  for (int t = 0; t < T; ++t) {
    auto obs = ivb::sample_round(inst, t % int(inst.Z.size()), rng);
    data.Z.row(t) = obs.z;
    data.X.row(t) = obs.x;
    data.Y[t] = obs.y;
  }
  return data;
}

Dataset noiseless_reduced(const Matrix& gamma, const Vector& theta, int reps) {
  const int d = int(gamma.rows());
  Dataset data;
  data.Z = Matrix::Zero(reps * d, d);
  data.X = Matrix::Zero(reps * d, d);
  data.Y = Vector::Zero(reps * d);
  for (int r = 0; r < reps; ++r)
    for (int i = 0; i < d; ++i) {
      data.Z(r * d + i, i) = 1.0;
      data.X.row(r * d + i) = gamma.row(i);  // X = Z Gamma exactly
      data.Y[r * d + i] = gamma.row(i).dot(theta);
    }
  return data;
}

}  // namespace

TEST_CASE("fit_gamma_ols exact and noisy") {
  Matrix G(2, 2);
  G << 0.8, 0.2, 0.3, 0.7;
  Vector th(2);
  th << 1, 0;
  auto data = noiseless_reduced(G, th, 3);
  Matrix Ghat = ivb::fit_gamma_ols(data);
  CHECK((Ghat - G).lpNorm<Eigen::Infinity>() <= 1e-10);

  // Symmetric +-0.1 perturbation cancels exactly.
  Dataset sym;
  sym.Z = Matrix::Identity(2, 2).replicate(2, 1);
  sym.X = sym.Z * G;
  sym.X(0, 0) += 0.1;
  sym.X(2, 0) -= 0.1;
  sym.Y = Vector::Zero(4);
  Ghat = ivb::fit_gamma_ols(sym);
  CHECK((Ghat - G).lpNorm<Eigen::Infinity>() <= 1e-10);

  // Monte-Carlo consistency on a d=3 compliance instance.
  Vector th3(3);
  th3 << 0.2, 0.4, 0.9;
  auto inst = ivb::make_interpolation(3, th3, 0.6);
  ivb::Rng rng(5);
  auto big = sample_uniform(inst, 10000, rng);
  Ghat = ivb::fit_gamma_ols(big);
  CHECK(ivb::extreme_singular_values(Ghat - inst.gamma).second <= 0.1);

  // Rank-deficient Z.
  Dataset degenerate;
  degenerate.Z = Matrix::Zero(4, 2);
  degenerate.Z.col(0).setOnes();
  degenerate.X = degenerate.Z;
  degenerate.Y = Vector::Zero(4);
  CHECK_THROWS_AS((void)ivb::fit_gamma_ols(degenerate), ivb::SingularDesign);
}

TEST_CASE("psi-IV family recovers theta in noiseless settings") {
  Vector th(3);
  th << 0.3, -0.2, 0.8;
  // Gamma = I, Psi = I, y = z^T theta.
  auto data = noiseless_reduced(Matrix::Identity(3, 3), th, 2);
  Vector ols = ivb::estimate_theta_psi(data, Matrix::Identity(3, 3));
  CHECK((ols - th).lpNorm<Eigen::Infinity>() <= 1e-12);

  // Psi = Gamma inverts the reduced form exactly.
  Matrix G(3, 3);
  G << 0.7, 0.2, 0.1, 0.15, 0.7, 0.15, 0.1, 0.2, 0.7;
  auto dataG = noiseless_reduced(G.transpose(), th, 2);  // structural gamma = G^T
  Vector oracle = ivb::estimate_theta_psi(dataG, G.transpose());
  CHECK((oracle - th).lpNorm<Eigen::Infinity>() <= 1e-10);

  // 2SLS on noiseless compliance data.
  Vector two = ivb::estimate_theta_2sls(dataG);
  CHECK((two - th).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("psi = identity matches textbook OLS on random data") {
  ivb::Rng rng(9);
  const int T = 40, d = 4;
  Dataset data;
  data.Z = Matrix(T, d);
  data.X = Matrix(T, d);
  data.Y = Vector(T);
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < d; ++j) {
      data.Z(t, j) = rng.normal();
      data.X(t, j) = rng.normal();
    }
    data.Y[t] = rng.normal();
  }
  Vector mine = ivb::estimate_theta_psi(data, Matrix::Identity(d, d));
  Vector text = (data.Z.transpose() * data.Z).ldlt().solve(data.Z.transpose() * data.Y);
  CHECK((mine - text).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("oracle consistent, OLS confounded on the motivating instance") {
  auto inst = ivb::make_jump_around(6, motivating_theta(), std::sqrt(0.35));
  ivb::Rng rng(13);
  auto data = sample_uniform(inst, 100000, rng);
  Vector oracle = ivb::estimate_theta_psi(data, inst.gamma);
  CHECK((oracle - inst.theta).lpNorm<Eigen::Infinity>() <= 0.05);
  Vector two = ivb::estimate_theta_2sls(data);
  CHECK((two - inst.theta).lpNorm<Eigen::Infinity>() <= 0.05);
  Vector ols = ivb::estimate_theta_psi(data, Matrix::Identity(6, 6));
  CHECK(std::abs(ols[0] - inst.theta[0]) > 0.1);

  // 2SLS equals psi-IV with the first stage fit on the same rows.
  Matrix Ghat = ivb::fit_gamma_ols(data);
  Vector psiv = ivb::estimate_theta_psi(data, Ghat);
  CHECK((two - psiv).lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("oracle estimator is unbiased; OLS bias exceeds 5 standard errors") {
  auto inst = ivb::make_jump_around(6, motivating_theta(), std::sqrt(0.35));
  ivb::Rng rng(17);
  const int reps = 300, T = 1200;
  Matrix oracle_means(reps, 6), ols_first(reps, 1);
  for (int r = 0; r < reps; ++r) {
    auto data = sample_uniform(inst, T, rng);
    oracle_means.row(r) = ivb::estimate_theta_psi(data, inst.gamma);
    ols_first(r, 0) = ivb::estimate_theta_psi(data, Matrix::Identity(6, 6))[0];
  }
  for (int j = 0; j < 6; ++j) {
    const double mean = oracle_means.col(j).mean();
    const double sd = std::sqrt((oracle_means.col(j).array() - mean).square().sum() / (reps - 1));
    CHECK(std::abs(mean - inst.theta[j]) <= 3.0 * sd / std::sqrt(double(reps)) + 1e-12);
  }
  const double m0 = ols_first.col(0).mean();
  const double sd0 = std::sqrt((ols_first.col(0).array() - m0).square().sum() / (reps - 1));
  CHECK(std::abs(m0 - inst.theta[0]) > 5.0 * sd0 / std::sqrt(double(reps)));
}

TEST_CASE("sigma_nu_bound and the derived theta norm bound") {
  ivb::NoiseBounds b;
  b.theta_norm_bound = 1.0;
  b.L_eta = 4.0;
  CHECK(ivb::sigma_nu_bound(b, true) == doctest::Approx(10.0));
  ivb::NoiseBounds zero;
  zero.theta_norm_bound = 0.0;
  zero.L_eta = 4.0;
  CHECK(ivb::sigma_nu_bound(zero, true) == doctest::Approx(2.0));
  CHECK(ivb::sigma_nu_bound(zero, false) == doctest::Approx(2.0));
  ivb::NoiseBounds g;
  g.theta_norm_bound = 2.0;
  g.L_eta = 1.0;
  CHECK(ivb::sigma_nu_bound(g, false) == doctest::Approx(10.0));

  CHECK(ivb::derived_theta_norm_bound(10.0, 4.0) == doctest::Approx(1.0));
  CHECK(ivb::derived_theta_norm_bound(10.0, 1.0) == doctest::Approx(2.0));
  CHECK_THROWS_AS((void)ivb::derived_theta_norm_bound(1.0, 4.0), ivb::BadParam);
}

TEST_CASE("log_bar frozen scalars and monotonicity") {
  // Degenerate scalar case: 8 ln 3 + 16 ln 48.
  Matrix Z1(1, 1);
  Z1 << 1;
  const double got = ivb::log_bar(Z1, 1.0, 1, 1.0, ivb::LogBarMode::Theoretical);
  CHECK(got == doctest::Approx(70.72811448387114).epsilon(1e-10));

  CHECK(ivb::log_bar(Z1, 0.1, 6, 1.0, ivb::LogBarMode::Practical) ==
        doctest::Approx(26.302585092994046).epsilon(1e-12));

  // sigma_min(Z^T Z) >= 2 collapses the second factor to 16 ln(2*6^d/delta).
  Matrix Z2 = 2.0 * Matrix::Identity(2, 2);  // Z^T Z = 4I
  const double d2 = 2;
  const double want = 8.0 * d2 * std::log(1.0 + 2.0 * 2.0 * 1.0 / (d2 * 2.0)) +
                      16.0 * std::log(2.0 * 36.0 / 0.5);
  CHECK(ivb::log_bar(Z2, 0.5, 2, 1.0, ivb::LogBarMode::Theoretical) ==
        doctest::Approx(want).epsilon(1e-12));

  for (auto mode : {ivb::LogBarMode::Theoretical, ivb::LogBarMode::Practical}) {
    double prev = 0.0;
    for (double delta : {0.5, 0.1, 0.01}) {
      const double v = ivb::log_bar(Z2, delta, 2, 1.0, mode);
      CHECK(v > 0.0);
      CHECK(v >= prev);
      prev = v;
    }
  }
}

TEST_CASE("oracle CI width plug-in oracles") {
  // Z with Z^T Z = 4I: four basis rows per coordinate.
  Matrix Z4(8, 2);
  Z4.setZero();
  for (int t = 0; t < 8; ++t) Z4(t, t % 2) = 1.0;
  Vector e1(2);
  e1 << 1, 0;
  const double width =
      ivb::oracle_ci_width(e1, Z4, Matrix::Identity(2, 2), 1.0, 2.0 / std::exp(1.0));
  CHECK(width == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));

  // Stacking the design 4x halves the width.
  Matrix Zbig(32, 2);
  Zbig.setZero();
  for (int t = 0; t < 32; ++t) Zbig(t, t % 2) = 1.0;
  const double width4 =
      ivb::oracle_ci_width(e1, Zbig, Matrix::Identity(2, 2), 1.0, 2.0 / std::exp(1.0));
  CHECK(width4 == doctest::Approx(width / 2.0).epsilon(1e-12));
}

TEST_CASE("CI widths are invariant to row permutation") {
  ivb::Rng rng(21);
  const int T = 30, d = 3;
  Matrix Z(T, d);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < d; ++j) Z(t, j) = rng.normal();
  Matrix G = Matrix::Identity(d, d) * 0.9 + 0.05 * Matrix::Ones(d, d);
  Vector w(3);
  w << 1, -1, 0;
  ivb::NoiseBounds b{.L_nu = 10.0, .L_eta = 4.0, .theta_norm_bound = 1.0};

  std::vector<int> perm(T);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937(3));
  Matrix Zp(T, d);
  for (int t = 0; t < T; ++t) Zp.row(t) = Z.row(perm[t]);

  CHECK(ivb::oracle_ci_width(w, Z, G, 2.0, 0.1) ==
        doctest::Approx(ivb::oracle_ci_width(w, Zp, G, 2.0, 0.1)).epsilon(1e-12));
  CHECK(ivb::p2sls_ci_width(w, Z, Z, G, b, 0.1, ivb::LogBarMode::Theoretical) ==
        doctest::Approx(ivb::p2sls_ci_width(w, Zp, Zp, G, b, 0.1, ivb::LogBarMode::Theoretical))
            .epsilon(1e-12));
}

TEST_CASE("p2sls width limits and monotonicity") {
  Matrix Z(12, 3);
  Z.setZero();
  for (int t = 0; t < 12; ++t) Z(t, t % 3) = 1.0;
  Matrix G = Matrix::Identity(3, 3);
  Vector w(3);
  w << 1, 0, -1;

  // theta_norm_bound = 0 suppresses the first-stage term; remaining term is
  // the oracle width at log(4/delta).
  ivb::NoiseBounds b{.L_nu = 10.0, .L_eta = 4.0, .theta_norm_bound = 0.0};
  const double got = ivb::p2sls_ci_width(w, Z, Z, G, b, 0.1, ivb::LogBarMode::Theoretical);
  const double oracle_4 = std::sqrt(2.0 * 10.0 * ivb::mahalanobis_sq(w, Z.transpose() * Z) *
                                    std::log(4.0 / 0.1));
  CHECK(got == doctest::Approx(oracle_4).epsilon(1e-12));

  // Replicating either stage shrinks the width.
  ivb::NoiseBounds bfull{.L_nu = 10.0, .L_eta = 4.0, .theta_norm_bound = 1.0};
  Matrix Z2(24, 3);
  Z2 << Z, Z;
  const double base = ivb::p2sls_ci_width(w, Z, Z, G, bfull, 0.1, ivb::LogBarMode::Theoretical);
  CHECK(ivb::p2sls_ci_width(w, Z2, Z, G, bfull, 0.1, ivb::LogBarMode::Theoretical) < base);
  CHECK(ivb::p2sls_ci_width(w, Z, Z2, G, bfull, 0.1, ivb::LogBarMode::Theoretical) < base);
}

TEST_CASE("oracle CI empirical coverage on a fixed design") {
  auto inst = ivb::make_jump_around(6, motivating_theta(), std::sqrt(0.35));
  ivb::Rng rng(25);
  const int reps = 500, T = 120;
  ivb::NoiseBounds b;
  b.L_eta = 4.0;
  b.theta_norm_bound = inst.theta.norm();
  const double lnu = ivb::sigma_nu_bound(b, true);
  Vector w(6);
  w << 1, 0, 0, 0, 0, -1;
  const double truth = w.dot(inst.theta);
  int covered = 0;
  for (int r = 0; r < reps; ++r) {
    auto data = sample_uniform(inst, T, rng);
    Vector th = ivb::estimate_theta_psi(data, inst.gamma);
    const double width = ivb::oracle_ci_width(w, data.Z, inst.gamma, lnu, 0.1);
    if (std::abs(w.dot(th) - truth) <= width) covered++;
  }
  CHECK(double(covered) / reps >= 0.9);
}

TEST_CASE("stats_from matches suffstat accumulation") {
  auto inst = ivb::make_interpolation(3, Vector::LinSpaced(3, 0.1, 0.9), 0.7);
  ivb::Rng rng(29);
  auto data = sample_uniform(inst, 99, rng);
  auto s = ivb::stats_from(data);
  CHECK(s.T == 99);
  CHECK((s.ZtZ - data.Z.transpose() * data.Z).lpNorm<Eigen::Infinity>() <= 1e-9);
  CHECK((s.ZtX - data.Z.transpose() * data.X).lpNorm<Eigen::Infinity>() <= 1e-9);
  CHECK((s.ZtY - data.Z.transpose() * data.Y).lpNorm<Eigen::Infinity>() <= 1e-9);
  CHECK(s.max_row_norm == doctest::Approx(1.0));

  Matrix Ghat_rows = ivb::fit_gamma_ols(data);
  Matrix Ghat_stats = ivb::fit_gamma_ols(s);
  CHECK((Ghat_rows - Ghat_stats).lpNorm<Eigen::Infinity>() <= 1e-10);
  Vector t_rows = ivb::estimate_theta_psi(data, inst.gamma);
  Vector t_stats = ivb::estimate_theta_psi(s, inst.gamma);
  CHECK((t_rows - t_stats).lpNorm<Eigen::Infinity>() <= 1e-10);
}
