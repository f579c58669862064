// Parallel kernels against their serial references.
#include <benchmark/benchmark.h>

#include "svlab/experiments.hpp"
#include "svlab/finite_oracle.hpp"
#include "svlab/parallel.hpp"
#include "svlab/rademacher.hpp"
#include "svlab/spectrum.hpp"

using namespace svlab;

namespace {

void BM_gram_parallel(benchmark::State& st) {
  const auto m = assemble(gaussian_spec(64), static_cast<std::size_t>(st.range(0)), 1);
  for (auto _ : st) benchmark::DoNotOptimize(gram(m));
}

void BM_gram_serial(benchmark::State& st) {
  const auto m = assemble(gaussian_spec(64), static_cast<std::size_t>(st.range(0)), 1);
  for (auto _ : st) benchmark::DoNotOptimize(gram_reference(m));
}

void BM_rademacher_parallel(benchmark::State& st) {
  const auto raw = draw_samples(gaussian_spec(8), static_cast<std::size_t>(st.range(0)), 2);
  for (auto _ : st) benchmark::DoNotOptimize(rademacher_linear(raw, 1, 0, RademacherMode::exact).value);
}

void BM_rademacher_serial(benchmark::State& st) {
  const auto raw = draw_samples(gaussian_spec(8), static_cast<std::size_t>(st.range(0)), 2);
  for (auto _ : st) benchmark::DoNotOptimize(rademacher_exact_reference(raw));
}

FiniteInstance oracle_instance(int N) { return {{3, 1, 2, 5}, {{0, 4, -9, 12}, {7, 1, 3, -2}}, 8, N}; }

void BM_oracle_parallel(benchmark::State& st) {
  const auto inst = oracle_instance(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(tiny_oracle(inst, mpq_class(1, 4), OracleEngine::brute));
}

void BM_oracle_serial(benchmark::State& st) {
  const auto inst = oracle_instance(static_cast<int>(st.range(0)));
  const auto floor = tiny_oracle(inst, mpq_class(1, 4), OracleEngine::brute).floor;
  for (auto _ : st) benchmark::DoNotOptimize(tiny_oracle_reference(inst, floor));
}

void BM_sweep(benchmark::State& st) {
  ExperimentConfig cfg;
  cfg.spec = heavy_radial_spec(32, 3.0);
  cfg.beta_grid = {0.5, 0.25, 0.125, 0.0625};
  cfg.trials = 16;
  parallel::set_threads(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(run_sweep(cfg).summary.size());
  parallel::set_threads(1);
}

}  // namespace

BENCHMARK(BM_gram_parallel)->Arg(512)->Arg(4096);
BENCHMARK(BM_gram_serial)->Arg(512)->Arg(4096);
BENCHMARK(BM_rademacher_parallel)->Arg(10)->Arg(14);
BENCHMARK(BM_rademacher_serial)->Arg(10)->Arg(14);
BENCHMARK(BM_oracle_parallel)->Arg(5)->Arg(7);
BENCHMARK(BM_oracle_serial)->Arg(5)->Arg(7);
BENCHMARK(BM_sweep)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
