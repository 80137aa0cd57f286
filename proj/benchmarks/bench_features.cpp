#include <benchmark/benchmark.h>

#include <cmath>

#include "ncx/nonlinear_features.hpp"
#include "ncx/synth.hpp"

namespace {

// Quadratic reference used to show what the sorted-window search saves.
double naive_sampen(const std::vector<double>& x, int m, double r) {
  const std::size_t n = x.size();
  const auto mm = static_cast<std::size_t>(m);
  std::uint64_t a = 0, b = 0;
  for (std::size_t i = 0; i + mm < n; ++i) {
    for (std::size_t j = 0; j + mm < n; ++j) {
      if (i == j) continue;
      std::size_t k = 0;
      while (k < mm && std::abs(x[i + k] - x[j + k]) <= r) ++k;
      if (k < mm) continue;
      ++b;
      if (std::abs(x[i + mm] - x[j + mm]) <= r) ++a;
    }
  }
  return -std::log(static_cast<double>(a) / static_cast<double>(b));
}

void BM_Higuchi(benchmark::State& state) {
  const auto x = ncx::white_noise(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(ncx::higuchi_fd(x));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Higuchi)->RangeMultiplier(4)->Range(1 << 10, 1 << 16)->Complexity();

void BM_SampEn(benchmark::State& state) {
  const auto x = ncx::fgn(0.7, static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(ncx::sample_entropy(x));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SampEn)->RangeMultiplier(4)->Range(1 << 10, 1 << 14)->Complexity();

void BM_SampEnNaive(benchmark::State& state) {
  const auto x = ncx::fgn(0.7, static_cast<std::size_t>(state.range(0)), 2);
  const ncx::SampEnParams p;
  const double r = p.r_factor * ncx::series_sd(x, p.sd);
  for (auto _ : state) benchmark::DoNotOptimize(naive_sampen(x, p.m, r));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SampEnNaive)->RangeMultiplier(4)->Range(1 << 10, 1 << 14)->Complexity();

}  // namespace

BENCHMARK_MAIN();
