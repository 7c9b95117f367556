#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

#include <Eigen/Dense>

namespace ivb {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Trial stream key: depends only on (master, stream, trial), never on
// scheduling order, so concurrent trials are reproducible and mergeable.
inline std::uint64_t seed_hash(std::uint64_t master, std::uint64_t stream, std::uint64_t trial) {
  std::uint64_t h = master;
  for (std::uint64_t v : {stream, trial}) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    std::uint64_t s = h;
    h = splitmix64(s);
  }
  return h;
}

// xoshiro256++ with splitmix64 seeding. Satisfies UniformRandomBitGenerator,
// so std:: distributions accept it; all draws are reproducible per stream.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~std::uint64_t{0}; }

  result_type operator()() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0,1) with 53-bit resolution.
  double uniform() { return double((*this)() >> 11) * 0x1.0p-53; }

  // Standard normal via Marsaglia polar; second value cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    cached_ = v * m;
    has_cached_ = true;
    return u * m;
  }

  // Index draw from a probability vector (linear cumulative scan; d is tiny).
  template <typename Derived>
  int categorical(const Eigen::DenseBase<Derived>& p) {
    const double r = uniform();
    double c = 0.0;
    for (int i = 0; i < p.size(); ++i) {
      c += p[i];
      if (r < c) return i;
    }
    return int(p.size()) - 1;
  }

  // Uniform direction on the unit sphere in R^d.
  Eigen::VectorXd unit_vector(int d) {
    Eigen::VectorXd v(d);
    double n = 0.0;
    do {
      for (int i = 0; i < d; ++i) v[i] = normal();
      n = v.norm();
    } while (n < 1e-12);
    return v / n;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t state_[4];
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace ivb
