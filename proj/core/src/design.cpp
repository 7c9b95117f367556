#include "ivbandit/design.hpp"

#include <cmath>
#include <limits>

#include "ivbandit/errors.hpp"

namespace ivb {

namespace {

constexpr double kRidge = 1e-10;

void check_arms(const std::vector<Vector>& Z) {
  if (Z.empty()) throw BadParam("design: empty arm list");
  for (const auto& z : Z)
    if (z.size() != Z[0].size()) throw DimensionMismatch("design: ragged arm list");
}

// Columns c_z = Gamma^T z, the post-compliance directions.
std::vector<Vector> arm_directions(const std::vector<Vector>& Z, const Matrix& gamma) {
  std::vector<Vector> c;
  c.reserve(Z.size());
  for (const auto& z : Z) c.push_back(gamma.transpose() * z);
  return c;
}

Matrix info_at(const std::vector<Vector>& dirs, const Vector& weights) {
  const int d = int(dirs[0].size());
  Matrix A = Matrix::Zero(d, d);
  for (size_t z = 0; z < dirs.size(); ++z)
    if (weights[int(z)] > 0.0) A.noalias() += weights[int(z)] * dirs[z] * dirs[z].transpose();
  return A;
}

void reject_degenerate(const Matrix& A, const char* who) {
  const auto [smin, smax] = extreme_singular_values(A);
  if (smin <= 1e-12 * std::max(1.0, smax)) throw DegenerateSpan(who);
}

// Clip dust mass, renormalize, recount support.
void finalize_weights(Vector& w, double clip, int& support) {
  for (int z = 0; z < w.size(); ++z)
    if (w[z] < clip) w[z] = 0.0;
  const double s = w.sum();
  if (s <= 0.0) throw DegenerateSpan("design: clipped all mass");
  w /= s;
  support = 0;
  for (int z = 0; z < w.size(); ++z)
    if (w[z] > 0.0) support++;
}

}  // namespace

Matrix design_info_matrix(const Vector& weights, const std::vector<Vector>& Z,
                          const Matrix& gamma) {
  check_arms(Z);
  if (weights.size() != int(Z.size())) throw DimensionMismatch("design: weights vs arms");
  return info_at(arm_directions(Z, gamma), weights);
}

double max_pair_objective(const std::vector<Vector>& pairs, const std::vector<double>& coefs,
                          const Vector& weights, const std::vector<Vector>& Z,
                          const Matrix& gamma) {
  if (pairs.empty()) throw BadParam("design: no pairs");
  if (coefs.size() != pairs.size()) throw DimensionMismatch("design: coefs vs pairs");
  Matrix A = design_info_matrix(weights, Z, gamma);
  A.diagonal().array() += kRidge;
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success) throw DegenerateSpan("design: info matrix not PD");
  double best = 0.0;
  for (size_t i = 0; i < pairs.size(); ++i) {
    const Vector u = llt.solve(pairs[i]);
    best = std::max(best, coefs[i] * pairs[i].dot(u));
  }
  return best;
}

Design weighted_xy_design(const std::vector<Vector>& pairs, const std::vector<double>& coefs,
                          const std::vector<Vector>& Z, const Matrix& gamma,
                          const SolverOptions& opts) {
  check_arms(Z);
  if (pairs.empty()) throw BadParam("design: no pairs");
  if (coefs.size() != pairs.size()) throw DimensionMismatch("design: coefs vs pairs");
  const auto dirs = arm_directions(Z, gamma);
  const int n = int(Z.size());
  const int d = int(dirs[0].size());

  Vector lam = Vector::Constant(n, 1.0 / n);
  reject_degenerate(info_at(dirs, lam), "design: arms do not span after jitter");

  Vector best_lam = lam;
  double best_obj = std::numeric_limits<double>::infinity();
  int last_improve = 0;
  for (int t = 1; t <= opts.max_iters; ++t) {
    Matrix A = info_at(dirs, lam);
    A.diagonal().array() += kRidge;
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success) throw DegenerateSpan("design: iterate not PD");

    double obj = -1.0;
    std::vector<Vector> sols(pairs.size());
    std::vector<double> vals(pairs.size());
    for (size_t i = 0; i < pairs.size(); ++i) {
      sols[i] = llt.solve(pairs[i]);
      vals[i] = coefs[i] * pairs[i].dot(sols[i]);
      obj = std::max(obj, vals[i]);
    }
    if (obj < best_obj) {
      if (obj < best_obj - opts.rel_tol * obj) last_improve = t;
      best_obj = obj;
      best_lam = lam;
    }
    // Stagnation stop: no relative improvement for a stretch of iterations.
    if (t - last_improve >= 500) break;

    // Supergradient of the max averaged over near-tied active pairs; a single
    // pair's gradient cycles well above the optimum when the max is attained
    // jointly.
    int z_star = 0;
    double score = -1.0;
    for (int z = 0; z < n; ++z) {
      double s = 0.0;
      for (size_t i = 0; i < pairs.size(); ++i) {
        if (vals[i] < obj * (1.0 - 1e-3)) continue;
        const double g = sols[i].dot(dirs[z]);
        s += coefs[i] * g * g;
      }
      if (s > score) {
        score = s;
        z_star = z;
      }
    }
    const double step = 2.0 / (t + 2.0);
    lam *= (1.0 - step);
    lam[z_star] += step;
  }

  Design out;
  out.weights = best_lam;
  finalize_weights(out.weights, opts.clip, out.support_size);
  out.objective_value = max_pair_objective(pairs, coefs, out.weights, Z, gamma);
  return out;
}

Design xy_design(const std::vector<Vector>& pairs, const std::vector<Vector>& Z,
                 const Matrix& gamma, const SolverOptions& opts) {
  return weighted_xy_design(pairs, std::vector<double>(pairs.size(), 1.0), Z, gamma, opts);
}

std::pair<Design, double> e_design(const std::vector<Vector>& Z, const SolverOptions& opts) {
  check_arms(Z);
  const int n = int(Z.size());
  const int d = int(Z[0].size());

  auto vmat = [&](const Vector& w) {
    Matrix V = Matrix::Zero(d, d);
    for (int z = 0; z < n; ++z)
      if (w[z] > 0.0) V.noalias() += w[z] * Z[z] * Z[z].transpose();
    return V;
  };

  Vector lam = Vector::Constant(n, 1.0 / n);
  reject_degenerate(vmat(lam), "e_design: arms do not span");

  Vector best_lam = lam;
  double best_obj = -1.0;
  int last_improve = 0;
  for (int t = 1; t <= opts.max_iters; ++t) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(vmat(lam));
    const double smin = eig.eigenvalues()[0];
    if (smin > best_obj) {
      if (smin > best_obj + opts.rel_tol * smin) last_improve = t;
      best_obj = smin;
      best_lam = lam;
    }
    if (t - last_improve >= 500) break;

    // Supergradient of the smallest eigenvalue; averaged over a near-tied
    // bottom pair to avoid oscillation.
    const Vector v0 = eig.eigenvectors().col(0);
    const bool tied = d > 1 && eig.eigenvalues()[1] - smin < 1e-8;
    const Vector v1 = tied ? Vector(eig.eigenvectors().col(1)) : Vector();
    int z_star = 0;
    double score = -1.0;
    for (int z = 0; z < n; ++z) {
      double s = v0.dot(Z[z]) * v0.dot(Z[z]);
      if (tied) s = 0.5 * (s + v1.dot(Z[z]) * v1.dot(Z[z]));
      if (s > score) {
        score = s;
        z_star = z;
      }
    }
    const double step = 2.0 / (t + 2.0);
    lam *= (1.0 - step);
    lam[z_star] += step;
  }

  Design out;
  out.weights = best_lam;
  finalize_weights(out.weights, opts.clip, out.support_size);
  Eigen::SelfAdjointEigenSolver<Matrix> fin(vmat(out.weights), Eigen::EigenvaluesOnly);
  const double kappa = fin.eigenvalues()[0];
  if (kappa <= 0.0) throw DegenerateSpan("e_design: degenerate optimum");
  out.objective_value = kappa;
  return {out, kappa};
}

std::vector<long long> round_design(const Design& design, long long N,
                                    const RoundingParams& params) {
  if (N < params.r_of_omega) throw TooFewSamples("round_design: N below r(omega)");
  const int n = int(design.weights.size());
  int p = 0;
  for (int z = 0; z < n; ++z)
    if (design.weights[z] > 0.0) p++;
  if (p < 1) throw BadParam("round_design: empty support");

  std::vector<long long> counts(n, 0);
  long long total = 0;
  for (int z = 0; z < n; ++z) {
    if (design.weights[z] <= 0.0) continue;
    counts[z] = (long long)std::ceil((double(N) - p / 2.0) * design.weights[z]);
    counts[z] = std::max<long long>(counts[z], 1);
    total += counts[z];
  }
  while (total > N) {
    int pick = -1;
    double ratio = -1.0;
    for (int z = 0; z < n; ++z) {
      if (counts[z] < 2) continue;
      const double r = double(counts[z]) / design.weights[z];
      if (r > ratio) {
        ratio = r;
        pick = z;
      }
    }
    counts[pick]--;
    total--;
  }
  while (total < N) {
    int pick = -1;
    double ratio = std::numeric_limits<double>::infinity();
    for (int z = 0; z < n; ++z) {
      if (design.weights[z] <= 0.0) continue;
      const double r = double(counts[z]) / design.weights[z];
      if (r < ratio) {
        ratio = r;
        pick = z;
      }
    }
    counts[pick]++;
    total++;
  }
  return counts;
}

long long r_min(const Design& design, double omega) {
  if (omega <= 0.0 || omega > 1.0) throw BadParam("r_min: omega outside (0,1]");
  return (long long)std::ceil(2.0 * design.support_size / omega);
}

double rho_star(const ProblemInstance& inst, double gamma_floor, const SolverOptions& opts) {
  if (gamma_floor < 0.0) throw BadParam("rho_star: negative gamma floor");
  const auto ba = best_arm(inst);
  std::vector<Vector> pairs;
  std::vector<double> coefs;
  for (size_t w = 0; w < inst.W.size(); ++w) {
    if (int(w) == ba.index) continue;
    pairs.push_back(inst.W[ba.index] - inst.W[w]);
    const double gap = ba.gaps[int(w)];
    coefs.push_back(1.0 / std::max(gap * gap, gamma_floor * gamma_floor));
  }
  if (pairs.empty()) return 0.0;  // single evaluation arm: nothing to separate
  return weighted_xy_design(pairs, coefs, inst.Z, inst.gamma, opts).objective_value;
}

double oracle_lower_bound_samples(const ProblemInstance& inst, const Matrix& Sigma, double delta,
                                  const SolverOptions& opts) {
  if (!(delta > 0.0 && delta <= 0.05)) throw BadDelta("oracle_lower_bound: delta outside (0,0.05]");
  const int d = inst.X_dim;
  if (Sigma.rows() != d + 1 || Sigma.cols() != d + 1)
    throw DimensionMismatch("oracle_lower_bound: Sigma must be (d+1)x(d+1)");
  Vector v(d + 1);
  v.head(d) = inst.theta;
  v[d] = 1.0;
  const double sigma_sq = v.dot(Sigma * v);
  return sigma_sq * rho_star(inst, 0.0, opts) * std::log(1.0 / delta) / 2.0;
}

}  // namespace ivb
