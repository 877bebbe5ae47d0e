#include <benchmark/benchmark.h>

#include <random>

#include "tnad/training.hpp"

using namespace tnad;

namespace {

std::vector<ProductState> batch_for(const MpoShape& sh, std::size_t n) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ProductState> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(sh.sites);
    for (auto& v : x) v = u(gen);
    out.push_back(embed_sample(x, {EmbeddingKind::fourier, sh.physical_dim}));
  }
  return out;
}

// args: N, p, b, S
MpoShape shape_of(const benchmark::State& st) {
  return {static_cast<std::size_t>(st.range(0)), static_cast<std::size_t>(st.range(1)),
          static_cast<std::size_t>(st.range(2)), static_cast<std::size_t>(st.range(3))};
}

void BM_DecisionLog(benchmark::State& st) {
  const auto sh = shape_of(st);
  const auto m = init_mpo(sh, 0.5, 1);
  const auto x = batch_for(sh, 1).front();
  for (auto _ : st) benchmark::DoNotOptimize(decision_log(m, x));
  st.SetComplexityN(st.range(0));
}

void BM_FnormLog(benchmark::State& st) {
  const auto sh = shape_of(st);
  const auto m = init_mpo(sh, 0.5, 1);
  for (auto _ : st) benchmark::DoNotOptimize(fnorm_log(m));
  st.SetComplexityN(st.range(0));
}

void BM_LossGradient(benchmark::State& st) {
  const auto sh = shape_of(st);
  const auto m = init_mpo(sh, 0.5, 1);
  const auto batch = batch_for(sh, 32);
  for (auto _ : st) benchmark::DoNotOptimize(loss_gradient(m, batch, 0.4, SentinelPolicy::clamp));
  st.SetItemsProcessed(st.iterations() * 32);
}

}  // namespace

// table presets: wine, glass, mnist
BENCHMARK(BM_DecisionLog)->Args({13, 4, 5, 1})->Args({9, 16, 5, 2})->Args({196, 2, 5, 8});
BENCHMARK(BM_FnormLog)->Args({13, 4, 5, 1})->Args({9, 16, 5, 2})->Args({196, 2, 5, 8});

// N sweep at the mnist (p, b, S)
BENCHMARK(BM_DecisionLog)->ArgsProduct({{49, 98, 196, 392}, {2}, {5}, {8}})->Name("BM_DecisionLogScaling")->Complexity(benchmark::oN);
BENCHMARK(BM_FnormLog)->ArgsProduct({{49, 98, 196, 392}, {2}, {5}, {8}})->Name("BM_FnormLogScaling")->Complexity(benchmark::oN);

BENCHMARK(BM_LossGradient)->Args({13, 4, 5, 1})->Args({196, 2, 5, 8})->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
