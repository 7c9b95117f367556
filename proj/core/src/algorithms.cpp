#include "ivbandit/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "ivbandit/errors.hpp"

namespace ivb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_params(const AlgoParams& p) {
  if (!(p.delta > 0.0 && p.delta < 1.0)) throw BadParam("delta must lie in (0,1)");
  if (!(p.omega > 0.0 && p.omega <= 1.0)) throw BadParam("omega must lie in (0,1]");
  if (!(p.g >= 1.0)) throw BadParam("g must be >= 1");
  if (p.max_phases < 1) throw BadParam("max_phases must be positive");
  if (p.max_total_samples < 1) throw BadParam("max_total_samples must be positive");
  validate_bounds(p.bounds);
}

std::vector<int> full_active(size_t n) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

std::vector<Vector> pair_dirs(const std::vector<Vector>& W, const std::vector<int>& active) {
  std::vector<Vector> pairs;
  for (size_t a = 0; a < active.size(); ++a)
    for (size_t b = a + 1; b < active.size(); ++b) pairs.push_back(W[active[a]] - W[active[b]]);
  return pairs;
}

int argmax_active(const std::vector<Vector>& W, const std::vector<int>& active,
                  const Vector& theta_hat) {
  int best = active.front();
  double val = W[best].dot(theta_hat);
  for (int i : active) {
    const double v = W[i].dot(theta_hat);
    if (v > val) {
      val = v;
      best = i;
    }
  }
  return best;
}

// Min-norm least squares. Phase designs legitimately support fewer than d
// arms, so the normal matrix may be singular while every active direction
// (a span member by construction of a finite design objective) stays
// identified; the min-norm solution preserves those inner products.
Vector solve_min_norm(const Matrix& A, const Vector& b) {
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(A);
  return cod.solve(b);
}

// (Z^T Z Psi) theta = Z^T Y.
Vector theta_through(const SuffStats& stats, const Matrix& psi) {
  return solve_min_norm(stats.ZtZ * psi, stats.ZtY);
}

// (Psi^T Z^T Z Psi) theta = Psi^T Z^T Y.
Vector theta_sandwich(const SuffStats& stats, const Matrix& psi) {
  return solve_min_norm(psi.transpose() * stats.ZtZ * psi, psi.transpose() * stats.ZtY);
}

double sym_min_eig(const Matrix& A) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(A, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

// ||v||^2 under the pseudo-inverse; directions outside the sampled span have
// infinite norm, which keeps stopping rules sampling instead of lying.
double mahal_sq_pinv(const Vector& v, const Matrix& A) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(A);
  const Vector& vals = eig.eigenvalues();
  const double top = std::max(vals.maxCoeff(), 0.0);
  const double tol = 1e-12 * std::max(1.0, top);
  const Vector c = eig.eigenvectors().transpose() * v;
  const double vnorm = std::max(1.0, v.norm());
  double out = 0.0;
  for (int i = 0; i < vals.size(); ++i) {
    if (vals[i] > tol)
      out += c[i] * c[i] / vals[i];
    else if (std::abs(c[i]) > 1e-9 * vnorm)
      return kInf;
  }
  return out;
}

// Largest pair norm under the inverse information of the accumulated rows,
// scaled by the norm bound and the self-normalized log factor.
double stop_statistic(const std::vector<Vector>& W, const std::vector<int>& active,
                      const SuffStats& stats, const Matrix& gamma, double delta,
                      const AlgoParams& p) {
  const Matrix A = abar(stats, gamma);
  double worst = 0.0;
  for (size_t a = 0; a < active.size(); ++a)
    for (size_t b = a + 1; b < active.size(); ++b) {
      const double m = mahal_sq_pinv(W[active[a]] - W[active[b]], A);
      if (m == kInf) return kInf;
      worst = std::max(worst, m);
    }
  const double lb = log_bar_stats(stats.T, sym_min_eig(stats.ZtZ), delta, int(stats.ZtZ.rows()),
                                  stats.max_row_norm, p.log_mode);
  return std::sqrt(worst) * p.bounds.theta_norm_bound * std::sqrt(p.bounds.L_eta * lb);
}

long long checked_ceil(double raw, const char* what, long long samples_done, int phases_done,
                       int partial) {
  if (!(raw < 9.0e18)) throw CapExceeded(std::string(what) + ": budget overflow", samples_done,
                                         phases_done, partial);
  return (long long)std::ceil(raw);
}

// ceil(2(1+w) zeta^-2 rho L_nu log(4 k^2 |W| / delta)) v r(w). zeta is a
// power of two, so the division is an exact scaling and the value is
// reproducible from the logged pieces.
long long phase_budget(const AlgoParams& p, double zeta, double rho, int k, int w_total,
                       double delta, const Design& des, long long samples_done, int phases_done,
                       int partial) {
  const double raw = 2.0 * (1.0 + p.omega) * rho * p.bounds.L_nu *
                     std::log(4.0 * double(k) * double(k) * double(w_total) / delta) /
                     (zeta * zeta);
  const long long n = checked_ceil(raw, "phase budget", samples_done, phases_done, partial);
  return std::max(n, r_min(des, p.omega));
}

void push_phase(TrialResult& res, int k, double zeta, const std::vector<int>& active,
                Design design, long long n, Matrix estimate, PhaseKind kind) {
  PhaseRecord rec;
  rec.k = k;
  rec.zeta = zeta;
  rec.active_set = active;
  rec.design = std::move(design);
  rec.N = n;
  rec.estimate = std::move(estimate);
  rec.kind = kind;
  res.phases.push_back(std::move(rec));
}

void finish_trial(TrialResult& res, const ProblemInstance& env, int recommended,
                  long long total) {
  res.recommended = recommended;
  res.total_samples = total;
  res.correct = recommended == best_arm(env).index;
}

}  // namespace

std::vector<int> eliminate(const std::vector<int>& active, const Vector& theta_hat,
                           const std::vector<Vector>& W, double threshold) {
  if (active.empty()) throw BadParam("eliminate: empty active set");
  double best = -kInf;
  for (int i : active) best = std::max(best, W[i].dot(theta_hat));
  std::vector<int> kept;
  for (int i : active)
    if (best - W[i].dot(theta_hat) <= threshold) kept.push_back(i);
  return kept;
}

TrialResult run_cpeg(const ProblemInstance& env, const AlgoParams& p, Rng& rng) {
  check_params(p);
  if (env.W.empty()) throw BadParam("empty evaluation set");
  TrialResult res;
  res.algorithm = "cpeg";
  std::vector<int> active = full_active(env.W.size());
  const int w_total = int(env.W.size());
  long long total = 0;
  int incumbent = active.front();
  for (int k = 1; int(active.size()) > 1; ++k) {
    if (k > p.max_phases) throw CapExceeded("run_cpeg: phase cap", total, k - 1, incumbent);
    const double zeta = std::ldexp(1.0, -k);
    const Design des = xy_design(pair_dirs(env.W, active), env.Z, env.gamma, p.solver);
    const long long n = phase_budget(p, zeta, des.objective_value, k, w_total, p.delta, des,
                                     total, k - 1, incumbent);
    if (n > p.max_total_samples - total)
      throw CapExceeded("run_cpeg: sample cap", total, k - 1, incumbent);
    const auto counts = round_design(des, n, {p.omega, r_min(des, p.omega)});
    const SuffStats stats = collect_rounds(env, counts, rng, p.sampling);
    const Vector th = theta_through(stats, env.gamma);
    push_phase(res, k, zeta, active, des, n, th, PhaseKind::ThetaPhase);
    total += n;
    incumbent = argmax_active(env.W, active, th);
    active = eliminate(active, th, env.W, zeta);
  }
  finish_trial(res, env, active.front(), total);
  return res;
}

ThetaEstimate theta_estimator(const ProblemInstance& env, const std::vector<int>& active,
                              double delta, double zeta, const Matrix& gamma_hat,
                              const AlgoParams& p, Rng& rng) {
  if (!(delta > 0.0 && delta < 1.0)) throw BadParam("theta_estimator: delta must lie in (0,1)");
  if (active.size() < 2) throw BadParam("theta_estimator: needs at least two active arms");
  ThetaEstimate out;
  out.design = xy_design(pair_dirs(env.W, active), env.Z, gamma_hat, p.solver);
  out.N2 = phase_budget(p, zeta, out.design.objective_value, 1, int(active.size()), delta,
                        out.design, 0, 0, -1);
  if (out.N2 > p.max_total_samples)
    throw CapExceeded("theta_estimator: sample cap", 0, 0, -1);
  const auto counts = round_design(out.design, out.N2, {p.omega, r_min(out.design, p.omega)});
  const SuffStats stats = collect_rounds(env, counts, rng, p.sampling);
  out.theta_hat = theta_sandwich(stats, gamma_hat);
  return out;
}

GammaEstimate gamma_estimator(const ProblemInstance& env, const std::vector<int>& active,
                              const std::optional<Matrix>& gamma_prev, double zeta, double delta,
                              const AlgoParams& p, const Design& lambda_E, double kappa0,
                              double M, Rng& rng) {
  if (!(delta > 0.0 && delta < 1.0)) throw BadParam("gamma_estimator: delta must lie in (0,1)");
  if (active.size() < 2) throw BadParam("gamma_estimator: needs at least two active arms");
  if (!(kappa0 > 0.0)) throw DegenerateSpan("gamma_estimator: spread design is degenerate");
  if (!(M >= 1.0)) throw BadParam("gamma_estimator: M must be >= 1");

  const int d = env.X_dim;
  const long long r_e = r_min(lambda_E, p.omega);
  const long long two_over_k0 = (long long)std::ceil(2.0 / kappa0);
  GammaEstimate out;
  SuffStats e_stats(d);
  long long samples = 0;
  Matrix cur;

  if (!gamma_prev) {
    // No prior estimate: spread-only batches, each doubling the total, until
    // the statistic of the running fit clears the absolute threshold 1.
    out.design = lambda_E;
    const long long base = std::max(r_e, two_over_k0);
    for (int ell = 1;; ++ell) {
      if (ell > 1) {
        const double dl = delta / (4.0 * double(ell) * double(ell));
        out.stop_value = stop_statistic(env.W, active, e_stats, cur, dl, p);
        if (out.stop_value <= 1.0) {
          out.ell_final = ell - 1;
          break;
        }
      }
      if (ell > p.max_phases)
        throw CapExceeded("gamma_estimator: doubling cap", samples, ell - 1, -1);
      const double batch_raw = std::ldexp(double(base), ell - 1);
      if (batch_raw > double(p.max_total_samples - samples))
        throw CapExceeded("gamma_estimator: sample cap", samples, ell - 1, -1);
      const long long batch = (long long)batch_raw;
      const auto counts = round_design(lambda_E, batch, {p.omega, 0});
      e_stats += collect_rounds(env, counts, rng, p.sampling);
      samples += batch;
      out.N0.push_back(samples);
      cur = fit_gamma_ols(e_stats);
    }
  } else {
    // Prior estimate: pair-design batches double while spread rows are topped
    // up to a slowly growing cumulative target; the statistic is evaluated
    // with the prior (the quantity the caller's accuracy contract is about).
    const Design lam = xy_design(pair_dirs(env.W, active), env.Z, *gamma_prev, p.solver);
    out.design = lam;
    const long long r_lam = r_min(lam, p.omega);
    const double lz2 = env.L_z * env.L_z;
    const double six_d = 2.0 * std::pow(6.0, d);
    const double nprime_raw =
        4.0 * p.g * d * M * std::log(1.0 + 2.0 * M * (d + lz2) + 2.0 * M * 2.0 * p.g * d * M) +
        8.0 * M * std::log(six_d / delta);
    if (!(nprime_raw < 9.0e18))
      throw CapExceeded("gamma_estimator: base batch overflow", 0, 0, -1);
    const long long nprime = std::max((long long)std::floor(nprime_raw), r_lam);
    std::vector<long long> e_counts(env.Z.size(), 0);
    SuffStats xy_stats(d);
    long long e_total = 0;
    for (int ell = 1;; ++ell) {
      if (ell > 1) {
        const double dl = delta / (4.0 * double(ell) * double(ell));
        SuffStats all = e_stats;
        all += xy_stats;
        out.stop_value = stop_statistic(env.W, active, all, *gamma_prev, dl, p);
        if (out.stop_value <= zeta) {
          out.ell_final = ell - 1;
          break;
        }
      }
      if (ell > p.max_phases)
        throw CapExceeded("gamma_estimator: doubling cap", samples, ell - 1, -1);
      const double dl_now = delta / (4.0 * double(ell) * double(ell));
      const double n1_raw = std::ldexp(double(nprime), ell);
      const double n0_raw = std::max(
          2.0 * p.g * d * M * std::log(M * (d + n1_raw + lz2)) + 4.0 * M * std::log(six_d / dl_now),
          double(std::max(r_e, two_over_k0)));
      if (!(n1_raw + n0_raw < double(p.max_total_samples - samples)))
        throw CapExceeded("gamma_estimator: sample cap", samples, ell - 1, -1);
      const long long n1 = (long long)n1_raw;
      const long long n0 = (long long)std::ceil(n0_raw);

      // Top the spread rows up to the cumulative target so the accumulated
      // counts keep the rounding guarantee of the target itself.
      const auto target = round_design(lambda_E, n0, {p.omega, 0});
      std::vector<long long> inc(target.size(), 0);
      for (size_t z = 0; z < target.size(); ++z) {
        inc[z] = std::max<long long>(0, target[z] - e_counts[z]);
        e_counts[z] += inc[z];
        e_total += inc[z];
      }
      e_stats += collect_rounds(env, inc, rng, p.sampling);

      // Fresh pair batch; the previous one leaves the fit but stays counted.
      const auto xy_counts = round_design(lam, n1, {p.omega, r_lam});
      xy_stats = collect_rounds(env, xy_counts, rng, p.sampling);

      samples = 0;
      for (long long v : out.N1) samples += v;
      samples += n1 + e_total;
      out.N0.push_back(e_total);
      out.N1.push_back(n1);
      SuffStats all = e_stats;
      all += xy_stats;
      cur = fit_gamma_ols(all);
    }
  }
  out.gamma_hat = cur;
  out.samples_used = samples;
  return out;
}

TrialResult run_cpeug(const ProblemInstance& env, const AlgoParams& p, Rng& rng) {
  check_params(p);
  if (env.W.empty()) throw BadParam("empty evaluation set");
  if (!(p.gamma_min > 0.0)) throw BadParam("run_cpeug: gamma_min must be positive");
  TrialResult res;
  res.algorithm = "cpeug";
  std::vector<int> active = full_active(env.W.size());
  long long total = 0;
  if (active.size() <= 1) {
    finish_trial(res, env, active.front(), total);
    return res;
  }

  const auto [lambda_e, kappa0] = e_design(env.Z, p.solver);
  const double m_cap = std::max(32.0 * p.bounds.L_eta / (p.gamma_min * p.gamma_min * kappa0), 1.0);
  std::optional<Matrix> gamma_prev;
  int incumbent = active.front();
  double zeta = 1.0;  // literal schedule: 1, then 2^-k from the second phase on
  for (int k = 1; int(active.size()) > 1; ++k) {
    if (k > p.max_phases) throw CapExceeded("run_cpeug: phase cap", total, k - 1, incumbent);
    if (k > 1) zeta = std::ldexp(1.0, -k);
    const double dk = p.delta / (double(k) * double(k));
    AlgoParams sub = p;
    sub.max_total_samples = p.max_total_samples - total;

    GammaEstimate ge;
    try {
      ge = gamma_estimator(env, active, gamma_prev, zeta, dk, sub, lambda_e, kappa0, m_cap, rng);
    } catch (const CapExceeded& e) {
      throw CapExceeded(e.what(), total + e.samples_used, k - 1, incumbent);
    }
    total += ge.samples_used;
    push_phase(res, k, zeta, active, ge.design, ge.samples_used, ge.gamma_hat,
               PhaseKind::GammaPhase);

    sub.max_total_samples = p.max_total_samples - total;
    ThetaEstimate te;
    try {
      te = theta_estimator(env, active, dk, zeta, ge.gamma_hat, sub, rng);
    } catch (const CapExceeded& e) {
      throw CapExceeded(e.what(), total + e.samples_used, k - 1, incumbent);
    }
    total += te.N2;
    push_phase(res, k, zeta, active, te.design, te.N2, te.theta_hat, PhaseKind::ThetaPhase);

    incumbent = argmax_active(env.W, active, te.theta_hat);
    active = eliminate(active, te.theta_hat, env.W, zeta);
    gamma_prev = ge.gamma_hat;
  }
  finish_trial(res, env, active.front(), total);
  return res;
}

PluginTrial run_cpeg_plugin(const ProblemInstance& env, const Matrix& gamma_hat_offline,
                            const Matrix& offline_Z, const AlgoParams& p, Rng& rng) {
  check_params(p);
  if (env.W.empty()) throw BadParam("empty evaluation set");
  if (offline_Z.rows() < 1 || offline_Z.cols() != env.X_dim)
    throw BadParam("offline rows empty or mis-sized");

  // Slack: worst full-pair norm under the offline information, scaled by the
  // norm bound and the offline log factor.
  SuffStats off(env.X_dim);
  off.T = offline_Z.rows();
  off.ZtZ = offline_Z.transpose() * offline_Z;
  for (long long r = 0; r < offline_Z.rows(); ++r)
    off.max_row_norm = std::max(off.max_row_norm, offline_Z.row(r).norm());
  const auto everyone = full_active(env.W.size());
  const double slack =
      stop_statistic(env.W, everyone, off, gamma_hat_offline, p.delta, p);

  PluginTrial out;
  out.gamma_slack = slack;
  out.trial.algorithm = "cpeg-plugin";
  std::vector<int> active = everyone;
  long long total = 0;
  int incumbent = active.front();
  bool have_estimate = false;
  Vector th;
  const int w_total = int(env.W.size());
  for (int k = 1; int(active.size()) > 1; ++k) {
    const double zeta = std::ldexp(1.0, -k);
    double max_gap = 0.0;
    if (have_estimate) {
      double lo = kInf, hi = -kInf;
      for (int i : active) {
        const double v = env.W[i].dot(th);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      max_gap = hi - lo;
    }
    if (!(max_gap > 4.0 * slack || zeta > slack)) break;
    if (k > p.max_phases) throw CapExceeded("plugin: phase cap", total, k - 1, incumbent);

    const Design des = xy_design(pair_dirs(env.W, active), env.Z, gamma_hat_offline, p.solver);
    const double scale = std::min(1.0 / (zeta * zeta), 1.0 / (slack * slack));
    const double raw = 2.0 * (1.0 + p.omega) * des.objective_value * p.bounds.L_nu *
                       std::log(4.0 * double(k) * double(k) * double(w_total) / p.delta) * scale;
    const long long n = std::max(checked_ceil(raw, "plugin budget", total, k - 1, incumbent),
                                 r_min(des, p.omega));
    if (n > p.max_total_samples - total)
      throw CapExceeded("plugin: sample cap", total, k - 1, incumbent);
    const auto counts = round_design(des, n, {p.omega, r_min(des, p.omega)});
    const SuffStats stats = collect_rounds(env, counts, rng, p.sampling);
    th = theta_through(stats, gamma_hat_offline);
    have_estimate = true;
    push_phase(out.trial, k, zeta, active, des, n, th, PhaseKind::ThetaPhase);
    total += n;
    incumbent = argmax_active(env.W, active, th);
    active = eliminate(active, th, env.W, zeta + slack);
  }
  finish_trial(out.trial, env, have_estimate ? incumbent : active.front(), total);
  return out;
}

WarmUpResult estimate_lambda_min(const ProblemInstance& env, const AlgoParams& p, Rng& rng) {
  check_params(p);
  const int d = env.X_dim;
  const auto [lambda_e, kappa0] = e_design(env.Z, p.solver);
  (void)kappa0;
  const long long base = r_min(lambda_e, p.omega);
  const auto m_counts = round_design(lambda_e, base, {p.omega, 0});

  // The confidence-bound display assumes unit-norm instruments; larger ones
  // are rescaled internally and the band mapped back.
  double scale = 1.0;
  for (const auto& z : env.Z) scale = std::max(scale, z.norm());

  SuffStats stats(d);
  long long t = 0;
  for (int j = 1;; ++j) {
    if (j > p.max_phases) throw CapExceeded("warm-up: doubling cap", t, j - 1, -1);
    std::vector<long long> inc(m_counts.size(), 0);
    long long inc_total = 0;
    for (size_t z = 0; z < m_counts.size(); ++z) {
      inc[z] = (j == 1) ? m_counts[z] : (1LL << (j - 2)) * m_counts[z];
      inc_total += inc[z];
    }
    if (inc_total > p.max_total_samples - t)
      throw CapExceeded("warm-up: sample cap", t, j - 1, -1);
    stats += collect_rounds(env, inc, rng, p.sampling);
    t += inc_total;

    const Matrix gam = fit_gamma_ols(stats);
    const double sv_gamma = extreme_singular_values(gam).first * scale;
    const double sv_v = sym_min_eig(stats.ZtZ) / (scale * scale);
    const double lb = log_bar_stats(t, sv_v, p.delta, d, 1.0, LogBarMode::Theoretical);
    const double half_width = std::sqrt(lb / sv_v);  // sqrt(psi_t / t)
    const double lcb = sv_gamma - half_width;
    const double ucb = sv_gamma + half_width;
    if (lcb > 0.5 * ucb) {
      WarmUpResult out;
      out.lcb = lcb / scale;
      out.samples = t;
      out.doublings = j;
      return out;
    }
  }
}

std::vector<int> run_ucb_baseline(const ProblemInstance& env, long long horizon, Recommender rec,
                                  Rng& rng) {
  if (!env.batch.canonical) throw BadParam("optimistic baseline needs basis instruments");
  if (horizon < 1) throw BadParam("horizon must be positive");
  const int d = env.X_dim;
  std::vector<long long> pulls(d, 0);
  std::vector<double> reward(d, 0.0);
  std::vector<long long> treat_n(d, 0);
  std::vector<double> treat_sum(d, 0.0);
  Eigen::FullPivLU<Matrix> first_stage(env.gamma);
  Vector mu(d);
  std::vector<int> trace;
  trace.reserve(size_t(horizon));

  for (long long t = 1; t <= horizon; ++t) {
    int arm = 0;
    if (t <= d) {
      arm = int(t - 1);  // one forced pull per instrument
    } else {
      double best = -kInf;
      for (int i = 0; i < d; ++i) {
        const double idx =
            reward[i] / double(pulls[i]) + std::sqrt(2.0 * std::log(double(t)) / double(pulls[i]));
        if (idx > best) {
          best = idx;
          arm = i;
        }
      }
    }
    const auto obs = sample_round(env, arm, rng);
    int j = 0;
    obs.x.maxCoeff(&j);  // categorical treatment index
    pulls[arm]++;
    reward[arm] += obs.y;
    treat_n[j]++;
    treat_sum[j] += obs.y;

    int pick = 0;
    if (rec == Recommender::OLS) {
      double best = -kInf;
      for (int i = 0; i < d; ++i) {
        const double v = treat_n[i] > 0 ? treat_sum[i] / double(treat_n[i]) : -kInf;
        if (v > best) {
          best = v;
          pick = i;
        }
      }
    } else {
      bool all_seen = true;
      for (int i = 0; i < d; ++i)
        if (pulls[i] == 0) all_seen = false;
      if (!all_seen) {
        double best = -kInf;
        for (int i = 0; i < d; ++i) {
          const double v = pulls[i] > 0 ? reward[i] / double(pulls[i]) : -kInf;
          if (v > best) {
            best = v;
            pick = i;
          }
        }
      } else {
        for (int i = 0; i < d; ++i) mu[i] = reward[i] / double(pulls[i]);
        const Vector th = first_stage.solve(mu);  // deconfounded treatment means
        double best = -kInf;
        for (int i = 0; i < d; ++i)
          if (th[i] > best) {
            best = th[i];
            pick = i;
          }
      }
    }
    trace.push_back(pick);
  }
  return trace;
}

TrialResult run_static_baseline(const ProblemInstance& env, StaticKind kind, const AlgoParams& p,
                                Rng& rng) {
  check_params(p);
  if (env.W.empty()) throw BadParam("empty evaluation set");
  TrialResult res;
  switch (kind) {
    case StaticKind::Oracle: res.algorithm = "static-oracle"; break;
    case StaticKind::XY: res.algorithm = "static-xy"; break;
    case StaticKind::Uniform: res.algorithm = "static-uniform"; break;
    case StaticKind::SE: res.algorithm = "static-se"; break;
  }
  std::vector<int> active = full_active(env.W.size());
  long long total = 0;
  if (active.size() <= 1) {
    finish_trial(res, env, active.front(), total);
    return res;
  }

  Design fixed;
  if (kind == StaticKind::Oracle) {
    const auto ba = best_arm(env);  // simulation-only oracle knowledge
    std::vector<Vector> pairs;
    for (size_t i = 0; i < env.W.size(); ++i)
      if (int(i) != ba.index) pairs.push_back(env.W[ba.index] - env.W[i]);
    fixed = xy_design(pairs, env.Z, env.gamma, p.solver);
  } else if (kind == StaticKind::XY) {
    fixed = xy_design(pair_dirs(env.W, active), env.Z, env.gamma, p.solver);
  } else if (kind == StaticKind::Uniform) {
    fixed.weights = Vector::Constant(int(env.Z.size()), 1.0 / double(env.Z.size()));
    fixed.support_size = int(env.Z.size());
  }

  const int w_total = int(env.W.size());
  int incumbent = active.front();
  for (int k = 1; int(active.size()) > 1; ++k) {
    if (k > p.max_phases) throw CapExceeded(res.algorithm + ": phase cap", total, k - 1, incumbent);
    const double zeta = std::ldexp(1.0, -k);

    Design lam;
    if (kind == StaticKind::SE) {
      // Spread over the instruments matching the active arms.
      lam.weights = Vector::Zero(int(env.Z.size()));
      for (int i : active) {
        int match = -1;
        for (size_t z = 0; z < env.Z.size(); ++z)
          if ((env.Z[z] - env.W[i]).norm() < 1e-12) {
            match = int(z);
            break;
          }
        if (match < 0) throw BadParam("active arm has no matching instrument");
        lam.weights[match] = 1.0 / double(active.size());
      }
      lam.support_size = int(active.size());
    } else {
      lam = fixed;
    }
    const auto pairs = pair_dirs(env.W, active);
    lam.objective_value = max_pair_objective(pairs, std::vector<double>(pairs.size(), 1.0),
                                             lam.weights, env.Z, env.gamma);
    const long long n = phase_budget(p, zeta, lam.objective_value, k, w_total, p.delta, lam,
                                     total, k - 1, incumbent);
    if (n > p.max_total_samples - total)
      throw CapExceeded(res.algorithm + ": sample cap", total, k - 1, incumbent);
    const auto counts = round_design(lam, n, {p.omega, r_min(lam, p.omega)});
    const SuffStats stats = collect_rounds(env, counts, rng, p.sampling);
    const Vector th = theta_through(stats, env.gamma);
    push_phase(res, k, zeta, active, lam, n, th, PhaseKind::ThetaPhase);
    total += n;
    incumbent = argmax_active(env.W, active, th);
    active = eliminate(active, th, env.W, zeta);
  }
  finish_trial(res, env, active.front(), total);
  return res;
}

}  // namespace ivb
