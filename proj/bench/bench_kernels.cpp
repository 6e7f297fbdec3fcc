// Serial reference vs OpenMP kernels, plus naive vs lazy greedy.
//
//   ./bench_kernels --benchmark_filter=Posterior

#include <benchmark/benchmark.h>

#include <map>
#include <random>

#include "dataprog/applier.hpp"
#include "dataprog/labelmodels.hpp"
#include "dataprog/subset.hpp"
#include "dataprog/synthetic.hpp"

using namespace dprog;

namespace {

Exec exec_of(const benchmark::State& state) {
  return state.range(1) ? Exec::parallel : Exec::serial;
}

void label_exec(benchmark::State& state) { state.SetLabel(state.range(1) ? "omp" : "serial"); }

Matrix random_features(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist;
  Matrix x(n, d);
  for (double& v : x.values()) v = dist(gen);
  return x;
}

const SyntheticData& corpus(std::size_t n) {
  static std::map<std::size_t, SyntheticData> cache;
  auto it = cache.find(n);
  if (it == cache.end())
    it = cache.emplace(n, generate_synthetic({.n_labeled = 10, .n_unlabeled = n, .n_validation = 10,
                                              .n_test = 10}))
             .first;
  return it->second;
}

void BM_Apply(benchmark::State& state) {
  const auto& data = corpus(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto out = apply(data.rules.rules, data.unlabeled, data.rules.space, exec_of(state));
    benchmark::DoNotOptimize(out.votes.values().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  label_exec(state);
}

void BM_Posterior(benchmark::State& state) {
  const auto& data = corpus(static_cast<std::size_t>(state.range(0)));
  auto m = apply(data.rules.rules, data.unlabeled, data.rules.space);
  auto params = CageParams::zeros(m.votes);
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& x : params.theta.values()) x = u(gen);
  for (double& x : params.pi.values()) x = u(gen);
  for (auto _ : state) {
    auto p = cage_posterior_batch(params, m.votes, m.scores, exec_of(state));
    benchmark::DoNotOptimize(p.values().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  label_exec(state);
}

void BM_Similarity(benchmark::State& state) {
  auto x = random_features(static_cast<std::size_t>(state.range(0)), 32, 2);
  for (auto _ : state) {
    auto s = similarity_matrix(x, {}, exec_of(state));
    benchmark::DoNotOptimize(s.values().data());
  }
  label_exec(state);
}

void BM_FacilityNaive(benchmark::State& state) {
  auto sim = similarity_matrix(random_features(static_cast<std::size_t>(state.range(0)), 16, 3));
  for (auto _ : state) {
    auto sel = facility_location_greedy(sim, 50, exec_of(state));
    benchmark::DoNotOptimize(sel.indices.data());
  }
  label_exec(state);
}

void BM_FacilityLazy(benchmark::State& state) {
  auto sim = similarity_matrix(random_features(static_cast<std::size_t>(state.range(0)), 16, 3));
  for (auto _ : state) {
    auto sel = facility_location_lazy(sim, 50);
    benchmark::DoNotOptimize(sel.indices.data());
  }
  state.SetLabel("lazy");
}

}  // namespace

BENCHMARK(BM_Apply)->ArgsProduct({{2000, 20000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Posterior)->ArgsProduct({{20000, 200000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Similarity)->ArgsProduct({{500, 2000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FacilityNaive)->ArgsProduct({{500, 2000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FacilityLazy)->Args({500, 0})->Args({2000, 0})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
