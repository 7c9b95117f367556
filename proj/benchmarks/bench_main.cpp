#include <benchmark/benchmark.h>

#include <vector>

#include "ivbandit/algorithms.hpp"
#include "ivbandit/design.hpp"
#include "ivbandit/instances.hpp"
#include "ivbandit/numerics.hpp"
#include "ivbandit/rng.hpp"

namespace {

using namespace ivb;

ProblemInstance bench_instance() {
  Vector theta(4);
  theta << 0.5, 0.583, 0.67, 0.75;
  return make_interpolation(4, theta, 0.9);
}

std::vector<Vector> all_pairs(const std::vector<Vector>& W) {
  std::vector<Vector> pairs;
  for (size_t i = 0; i < W.size(); ++i)
    for (size_t j = i + 1; j < W.size(); ++j) pairs.push_back(W[i] - W[j]);
  return pairs;
}

void BM_SolvePsd(benchmark::State& state) {
  const int d = int(state.range(0));
  Rng rng(1);
  Matrix G(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) G(i, j) = rng.normal();
  const Matrix A = G * G.transpose() + 0.1 * Matrix::Identity(d, d);
  Vector b(d);
  for (int i = 0; i < d; ++i) b(i) = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(solve_psd(A, b));
}
BENCHMARK(BM_SolvePsd)->Arg(4)->Arg(16)->Arg(64);

void BM_PairDesign(benchmark::State& state) {
  const auto inst = bench_instance();
  const auto pairs = all_pairs(inst.W);
  for (auto _ : state) benchmark::DoNotOptimize(xy_design(pairs, inst.Z, inst.gamma));
}
BENCHMARK(BM_PairDesign);

void BM_SpreadDesign(benchmark::State& state) {
  const auto inst = bench_instance();
  for (auto _ : state) benchmark::DoNotOptimize(e_design(inst.Z));
}
BENCHMARK(BM_SpreadDesign);

// Per-draw vs batched collection of the same allocation; batched cost is flat
// in the per-arm count, per-draw is linear.
void BM_CollectExact(benchmark::State& state) {
  const auto inst = bench_instance();
  const std::vector<long long> counts(inst.Z.size(), state.range(0));
  Rng rng(2);
  for (auto _ : state)
    benchmark::DoNotOptimize(collect_rounds(inst, counts, rng, SamplingPolicy::Exact));
  state.SetItemsProcessed(state.iterations() * state.range(0) * long(inst.Z.size()));
}
BENCHMARK(BM_CollectExact)->Arg(1000)->Arg(10000);

void BM_CollectBatched(benchmark::State& state) {
  const auto inst = bench_instance();
  const std::vector<long long> counts(inst.Z.size(), state.range(0));
  Rng rng(2);
  for (auto _ : state)
    benchmark::DoNotOptimize(collect_rounds(inst, counts, rng, SamplingPolicy::Auto));
  state.SetItemsProcessed(state.iterations() * state.range(0) * long(inst.Z.size()));
}
BENCHMARK(BM_CollectBatched)->Arg(10000)->Arg(10000000);

void BM_EliminationTrial(benchmark::State& state) {
  const auto inst = bench_instance();
  AlgoParams params;
  params.bounds.L_eta = inst.noise.L_eta;
  params.bounds.theta_norm_bound = inst.theta.norm();
  params.bounds.L_nu = sigma_nu_bound(params.bounds, true);
  std::uint64_t trial = 0;
  for (auto _ : state) {
    Rng rng(trial++);
    benchmark::DoNotOptimize(run_cpeg(inst, params, rng));
  }
}
BENCHMARK(BM_EliminationTrial);

}  // namespace

BENCHMARK_MAIN();
