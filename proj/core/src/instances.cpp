#include "ivbandit/instances.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "ivbandit/errors.hpp"

namespace ivb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr long long kBatchMin = 4096;  // per-arm pulls before the batched path engages
constexpr long long kCellExactMax = 256;  // cells at most this size are drawn one by one

double norm_pdf(double x) { return std::exp(-0.5 * x * x) * 0.3989422804014327; }

double norm_cdf(double x) {
  if (x == -kInf) return 0.0;
  if (x == kInf) return 1.0;
  return 0.5 * std::erfc(-x * 0.7071067811865476);
}

// Acklam's rational approximation with one Newton refinement; ample for the
// rare exact truncated draws it serves.
double norm_quantile(double p) {
  p = std::clamp(p, 1e-300, 1.0 - 1e-16);
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = norm_cdf(x) - p;
  x -= e / std::max(norm_pdf(x), 1e-300);
  return x;
}

std::vector<Vector> basis_arms(int d) {
  std::vector<Vector> arms;
  arms.reserve(d);
  for (int i = 0; i < d; ++i) {
    Vector e = Vector::Zero(d);
    e[i] = 1.0;
    arms.push_back(std::move(e));
  }
  return arms;
}

void finish_canonical(ProblemInstance& inst) {
  const int d = inst.X_dim;
  inst.Z = basis_arms(d);
  inst.W = basis_arms(d);
  inst.L_z = 1.0;
  auto& bt = inst.batch;
  bt.canonical = true;
  bt.cond = inst.gamma;
  bt.eta_sq = Matrix(d, d);
  for (int i = 0; i < d; ++i) {
    const double g2 = inst.gamma.row(i).squaredNorm();
    for (int j = 0; j < d; ++j) bt.eta_sq(i, j) = std::max(0.0, 1.0 - 2.0 * inst.gamma(i, j) + g2);
  }
  const double smin = extreme_singular_values(inst.gamma).first;
  if (smin <= 1e-10) throw BadParam("instance gamma is numerically singular");
}

// Sequential-binomial multinomial draw; exact cell counts.
void multinomial(long long n, const Vector& p, Rng& rng, std::vector<long long>& out) {
  const int d = int(p.size());
  out.assign(d, 0);
  long long rem = n;
  double rest = 1.0;
  for (int j = 0; j < d && rem > 0; ++j) {
    if (j == d - 1) {
      out[j] = rem;
      rem = 0;
      break;
    }
    const double q = std::clamp(rest > 0 ? p[j] / rest : 1.0, 0.0, 1.0);
    long long m = 0;
    if (q >= 1.0) {
      m = rem;
    } else if (q > 0.0) {
      std::binomial_distribution<long long> dist(rem, q);
      m = dist(rng);
    }
    out[j] = m;
    rem -= m;
    rest -= p[j];
  }
}

// One structural draw for instrument i: treatment index and outcome.
std::pair<int, double> draw_xy(const ProblemInstance& inst, int i, Rng& rng) {
  const auto& bt = inst.batch;
  const int d = inst.X_dim;
  switch (inst.noise.kind) {
    case NoiseKind::JumpAround: {
      const double u = inst.noise.sigma_u * rng.normal();
      const double t = double(i + 1) + u;
      double fl = std::floor(t + 0.5);
      long long J = (long long)fl;
      if (t + 0.5 == fl) J -= 1;  // exact midpoint resolves to the lower index
      J = std::clamp(J, 1LL, (long long)d);
      const int j = int(J - 1);
      return {j, inst.theta[j] + u};
    }
    case NoiseKind::GaussianExogenous: {
      const int j = rng.categorical(bt.cond.row(i));
      return {j, inst.theta[j] + inst.noise.sigma_eps * rng.normal()};
    }
    case NoiseKind::ComplianceCategorical:
    case NoiseKind::InterpolationUnitNoise: {
      const int j = rng.categorical(bt.cond.row(i));
      double y = inst.theta[j];
      if (bt.eta_sq(i, j) > 1e-24) {
        const Vector v = rng.unit_vector(d);
        y += inst.noise.noise_scale * (v[j] - bt.cond.row(i).dot(v));
      }
      return {j, y};
    }
  }
  throw BadParam("unknown noise kind");
}

// Exact draw of u restricted to the cell that selects treatment j.
double truncated_u(const ProblemInstance& inst, int i, int j, Rng& rng) {
  const double s = inst.noise.sigma_u;
  const double flo = norm_cdf(inst.batch.u_lo(i, j) / s);
  const double fhi = norm_cdf(inst.batch.u_hi(i, j) / s);
  const double f = flo + rng.uniform() * std::max(0.0, fhi - flo);
  return s * norm_quantile(f);
}

// Per-arm sums (sum of x, sum of y) over n pulls of instrument i.
void draw_arm_sums(const ProblemInstance& inst, int i, long long n, Rng& rng,
                   SamplingPolicy policy, Vector& sx, double& sy) {
  const int d = inst.X_dim;
  sx.setZero(d);
  sy = 0.0;
  const auto& bt = inst.batch;
  const bool batched = policy == SamplingPolicy::Auto && bt.canonical && n >= kBatchMin;
  if (!batched) {
    for (long long t = 0; t < n; ++t) {
      auto [j, y] = draw_xy(inst, i, rng);
      sx[j] += 1.0;
      sy += y;
    }
    return;
  }

  // Exact multinomial treatment counts; within-cell noise sums carry the
  // cell-exact mean and variance, with a normal shape above kCellExactMax.
  std::vector<long long> m;
  multinomial(n, Vector(bt.cond.row(i)), rng, m);
  for (int j = 0; j < d; ++j) {
    if (m[j] == 0) continue;
    sx[j] += double(m[j]);
    sy += double(m[j]) * inst.theta[j];
  }
  switch (inst.noise.kind) {
    case NoiseKind::JumpAround: {
      for (int j = 0; j < d; ++j) {
        if (m[j] == 0) continue;
        if (m[j] <= kCellExactMax || bt.cond(i, j) < 1e-12) {
          for (long long t = 0; t < m[j]; ++t) sy += truncated_u(inst, i, j, rng);
        } else {
          sy += double(m[j]) * bt.u_mu(i, j) +
                std::sqrt(double(m[j]) * bt.u_var(i, j)) * rng.normal();
        }
      }
      break;
    }
    case NoiseKind::GaussianExogenous: {
      sy += inst.noise.sigma_eps * std::sqrt(double(n)) * rng.normal();
      break;
    }
    case NoiseKind::ComplianceCategorical:
    case NoiseKind::InterpolationUnitNoise: {
      double var = 0.0;
      for (int j = 0; j < d; ++j) var += double(m[j]) * bt.eta_sq(i, j) / double(d);
      var *= inst.noise.noise_scale * inst.noise.noise_scale;
      if (var > 0.0) sy += std::sqrt(var) * rng.normal();
      break;
    }
  }
}

}  // namespace

ProblemInstance make_compliance(const Matrix& gamma_colstoch, const Vector& theta,
                                const NoiseSpec& coupling) {
  const auto d = gamma_colstoch.rows();
  if (gamma_colstoch.cols() != d || d < 1) throw BadParam("compliance gamma must be square");
  if (theta.size() != d) throw BadParam("theta dimension mismatch");
  for (int j = 0; j < d; ++j) {
    if (std::abs(gamma_colstoch.col(j).sum() - 1.0) > 1e-9)
      throw NotStochastic("column does not sum to 1");
    for (int i = 0; i < d; ++i)
      if (gamma_colstoch(i, j) < 0.0) throw NotStochastic("negative entry");
  }
  if (coupling.kind == NoiseKind::JumpAround)
    throw BadParam("jump-around coupling requires make_jump_around");

  ProblemInstance inst;
  inst.X_dim = int(d);
  inst.gamma = gamma_colstoch.transpose();  // structural orientation
  inst.theta = theta;
  inst.noise = coupling;
  inst.id = "compliance-d" + std::to_string(d);
  finish_canonical(inst);
  return inst;
}

ProblemInstance make_jump_around(int d, const Vector& theta, double sigma_u) {
  if (d < 2) throw BadParam("jump-around needs d >= 2");
  if (!(sigma_u > 0.0)) throw BadParam("sigma_u must be positive");
  if (theta.size() != d) throw BadParam("theta dimension mismatch");

  ProblemInstance inst;
  inst.X_dim = d;
  inst.theta = theta;
  inst.noise.kind = NoiseKind::JumpAround;
  inst.noise.sigma_u = sigma_u;
  inst.id = "jump-around-d" + std::to_string(d);

  auto& bt = inst.batch;
  bt.u_lo = Matrix(d, d);
  bt.u_hi = Matrix(d, d);
  bt.u_mu = Matrix(d, d);
  bt.u_var = Matrix(d, d);
  inst.gamma = Matrix(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      // Cell of u selecting treatment j+1 from incentive i+1; end bins absorb tails.
      const double lo = (j == 0) ? -kInf : (double(j - i) - 0.5);
      const double hi = (j == d - 1) ? kInf : (double(j - i) + 0.5);
      bt.u_lo(i, j) = lo;
      bt.u_hi(i, j) = hi;
      const double alpha = lo / sigma_u, beta = hi / sigma_u;
      const double p = norm_cdf(beta) - norm_cdf(alpha);
      inst.gamma(i, j) = p;
      if (p > 1e-300) {
        const double pa = (lo == -kInf) ? 0.0 : norm_pdf(alpha);
        const double pb = (hi == kInf) ? 0.0 : norm_pdf(beta);
        const double apa = (lo == -kInf) ? 0.0 : alpha * pa;
        const double bpb = (hi == kInf) ? 0.0 : beta * pb;
        const double mu = (pa - pb) / p;
        bt.u_mu(i, j) = sigma_u * mu;
        bt.u_var(i, j) =
            std::max(0.0, sigma_u * sigma_u * (1.0 + (apa - bpb) / p - mu * mu));
      } else {
        bt.u_mu(i, j) = 0.0;
        bt.u_var(i, j) = 0.0;
      }
    }
  }
  finish_canonical(inst);
  return inst;
}

ProblemInstance make_interpolation(int d, const Vector& theta, double eps, double noise_scale) {
  if (d < 1) throw BadParam("interpolation needs d >= 1");
  if (!(eps > 0.0) || eps > 1.0) throw BadParam("eps must lie in (0,1]");
  if (!(noise_scale > 0.0)) throw BadParam("noise_scale must be positive");
  if (theta.size() != d) throw BadParam("theta dimension mismatch");

  ProblemInstance inst;
  inst.X_dim = d;
  inst.gamma = ((1.0 - eps) / d) * Matrix::Ones(d, d) + eps * Matrix::Identity(d, d);
  inst.theta = theta;
  inst.noise.kind = NoiseKind::InterpolationUnitNoise;
  inst.noise.noise_scale = noise_scale;
  inst.id = "interpolation-d" + std::to_string(d) + "-eps" + std::to_string(eps);
  finish_canonical(inst);
  return inst;
}

Observation sample_round(const ProblemInstance& inst, int z_index, Rng& rng) {
  if (z_index < 0 || z_index >= int(inst.Z.size())) throw BadParam("z_index out of range");
  auto [j, y] = draw_xy(inst, z_index, rng);
  Observation obs;
  obs.z = inst.Z[z_index];
  obs.x = Vector::Zero(inst.X_dim);
  obs.x[j] = 1.0;
  obs.y = y;
  return obs;
}

BestArm best_arm(const ProblemInstance& inst) {
  const int m = int(inst.W.size());
  Vector vals(m);
  for (int i = 0; i < m; ++i) vals[i] = inst.W[i].dot(inst.theta);
  int top = 0;
  for (int i = 1; i < m; ++i)
    if (vals[i] > vals[top]) top = i;
  double second = -kInf;
  for (int i = 0; i < m; ++i)
    if (i != top) second = std::max(second, vals[i]);
  if (m > 1 && vals[top] - second <= 1e-12) throw TieAtTop("two evaluation arms tie at the top");
  BestArm out;
  out.index = top;
  out.gaps = Vector(m);
  for (int i = 0; i < m; ++i) out.gaps[i] = vals[top] - vals[i];
  out.delta_min = (m > 1) ? vals[top] - second : 0.0;
  return out;
}

SuffStats collect_rounds(const ProblemInstance& inst, const std::vector<long long>& counts,
                         Rng& rng, SamplingPolicy policy) {
  if (counts.size() != inst.Z.size()) throw DimensionMismatch("counts size != |Z|");
  const int d = inst.X_dim;
  SuffStats s(d);
  Vector sx(d);
  for (size_t i = 0; i < counts.size(); ++i) {
    const long long n = counts[i];
    if (n < 0) throw BadParam("negative round count");
    if (n == 0) continue;
    double sy = 0.0;
    draw_arm_sums(inst, int(i), n, rng, policy, sx, sy);
    const Vector& z = inst.Z[i];
    s.T += n;
    s.ZtZ.noalias() += double(n) * (z * z.transpose());
    s.ZtX.noalias() += z * sx.transpose();
    s.ZtY.noalias() += sy * z;
    s.max_row_norm = std::max(s.max_row_norm, z.norm());
  }
  return s;
}

void conditional_outcome_moments(const ProblemInstance& inst, Vector& mean, Vector& var) {
  if (!inst.batch.canonical) throw BadParam("moments need a canonical instance");
  const int d = inst.X_dim;
  mean.resize(d);
  var.resize(d);
  const auto& bt = inst.batch;
  for (int i = 0; i < d; ++i) {
    const double m1 = bt.cond.row(i).dot(inst.theta);
    double m2 = 0.0;
    for (int j = 0; j < d; ++j) m2 += bt.cond(i, j) * inst.theta[j] * inst.theta[j];
    double v = m2 - m1 * m1;
    switch (inst.noise.kind) {
      case NoiseKind::JumpAround: {
        double cross = 0.0;
        for (int j = 0; j < d; ++j) cross += inst.theta[j] * bt.cond(i, j) * bt.u_mu(i, j);
        v += inst.noise.sigma_u * inst.noise.sigma_u + 2.0 * cross;
        break;
      }
      case NoiseKind::GaussianExogenous:
        v += inst.noise.sigma_eps * inst.noise.sigma_eps;
        break;
      case NoiseKind::ComplianceCategorical:
      case NoiseKind::InterpolationUnitNoise: {
        double ev = 0.0;
        for (int j = 0; j < d; ++j) ev += bt.cond(i, j) * bt.eta_sq(i, j) / double(d);
        v += inst.noise.noise_scale * inst.noise.noise_scale * ev;
        break;
      }
    }
    mean[i] = m1;
    var[i] = std::max(0.0, v);
  }
}

}  // namespace ivb
