#include <benchmark/benchmark.h>

#include "micrometric/calibration.hpp"
#include "micrometric/local_stats.hpp"
#include "micrometric/multiscale.hpp"
#include "micrometric/ssim.hpp"
#include "micrometric/synthetic.hpp"

using namespace micrometric;

namespace {

SynthPair make_pair(int side) {
  SynthParams params;
  params.height = side;
  params.width = side;
  params.n_blobs = side / 16;
  params.poisson_gain = 0.0;
  params.read_noise_sigma = 3.0;
  params.seed = 7;
  return generate_pair(params);
}

void BM_LocalStatistics(benchmark::State& state) {
  const SynthPair pair = make_pair(static_cast<int>(state.range(0)));
  const Window window = make_window(WindowKind::gaussian, 11, 1.5);
  for (auto _ : state) {
    StatsGrid grid = local_statistics(pair.gt, pair.low, window);
    benchmark::DoNotOptimize(grid.ux.data());
  }
  state.SetItemsProcessed(state.iterations() * pair.gt.size());
}
BENCHMARK(BM_LocalStatistics)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);

void BM_Mssim(benchmark::State& state) {
  const SynthPair pair = make_pair(static_cast<int>(state.range(0)));
  MetricConfig config;
  config.data_range = DataRangePolicy::explicit_range(pair.gt.max_value() - pair.gt.min_value());
  for (auto _ : state) {
    const SsimBreakdown b = mssim(pair.gt, pair.low, config);
    benchmark::DoNotOptimize(b.mssim);
  }
  state.SetItemsProcessed(state.iterations() * pair.gt.size());
}
BENCHMARK(BM_Mssim)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);

void BM_MsSsim(benchmark::State& state) {
  const SynthPair pair = make_pair(static_cast<int>(state.range(0)));
  MsSsimConfig config;
  config.base.data_range = DataRangePolicy::explicit_range(pair.gt.max_value() - pair.gt.min_value());
  for (auto _ : state) {
    benchmark::DoNotOptimize(ms_ssim(pair.gt, pair.low, config));
  }
}
BENCHMARK(BM_MsSsim)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_ObjectiveEvaluation(benchmark::State& state) {
  const SynthPair pair = make_pair(512);
  const Window window = make_window(WindowKind::gaussian, 11, 1.5);
  StatsSet stats;
  stats.append(local_statistics(pair.gt, pair.low, window));
  const SsimConstants k = constants_for_range(1.0, 0.01, 0.03);
  double alpha = 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(scaled_ssim_objective(stats, alpha, k.c1, k.c2));
    alpha += 1e-9;  // defeat caching without changing the work
  }
  state.SetItemsProcessed(state.iterations() * stats.size());
}
BENCHMARK(BM_ObjectiveEvaluation)->Unit(benchmark::kMillisecond);

void BM_FitAlpha(benchmark::State& state) {
  SynthParams params;
  params.height = 256;
  params.width = 256;
  params.scale = 5.0;
  params.poisson_gain = 0.0;
  params.read_noise_sigma = 2.0;
  params.seed = 9;
  const SynthPair pair = generate_pair(params);
  MetricConfig config;
  const Image x = preprocess(pair.gt, 100.0, pair.meta.gt_peak);
  const Image y = preprocess(pair.low, 110.0, pair.meta.gt_peak);
  StatsSet stats;
  stats.append(local_statistics(x, y, config.window));
  const SsimConstants k = constants_for_range(1.0, 0.01, 0.03);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_alpha(stats, k.c1, k.c2).alpha);
  }
}
BENCHMARK(BM_FitAlpha)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
