#include "neuroadapt/human_sim.hpp"
#include "neuroadapt/kernels.hpp"

#include <benchmark/benchmark.h>

#include <vector>

namespace {

using namespace neuroadapt;

const std::vector<Epoch>& epochs() {
  static const std::vector<Epoch> batch = [] {
    Rng rng(7);
    ErpModel m;
    std::vector<Epoch> out;
    for (int i = 0; i < 140; ++i) out.push_back(synth_epoch(m, i % 2, rng));
    return out;
  }();
  return batch;
}

const std::vector<FeatureMatrix>& features() {
  static const std::vector<FeatureMatrix> f = kernels::serial::featurize_batch(kernels::serial::filter_epochs(epochs()));
  return f;
}

std::vector<int> labels() {
  std::vector<int> y;
  for (int i = 0; i < 140; ++i) y.push_back(i % 2);
  return y;
}

void BM_filter_serial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(kernels::serial::filter_epochs(epochs()));
}
void BM_filter_omp(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(kernels::omp::filter_epochs(epochs()));
}
void BM_featurize_serial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(kernels::serial::featurize_batch(epochs()));
}
void BM_featurize_omp(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(kernels::omp::featurize_batch(epochs()));
}
void BM_tstats_serial(benchmark::State& st) {
  const auto y = labels();
  for (auto _ : st) benchmark::DoNotOptimize(kernels::serial::abs_tstats(features(), y));
}
void BM_tstats_omp(benchmark::State& st) {
  const auto y = labels();
  for (auto _ : st) benchmark::DoNotOptimize(kernels::omp::abs_tstats(features(), y));
}

BENCHMARK(BM_filter_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_filter_omp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_featurize_serial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_featurize_omp)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_tstats_serial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_tstats_omp)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
