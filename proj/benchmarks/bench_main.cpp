#include <benchmark/benchmark.h>

#include "qres/channels.hpp"
#include "qres/measures.hpp"

using namespace qres;

static void BM_QuasiprobPoint(benchmark::State& state) {
  const auto rho = make_cat({1.5, 0.0}, static_cast<int>(state.range(0))).density();
  double sink = 0.0;
  for (auto _ : state) {
    sink += quasiprob(rho, {0.3, -0.2}, 0.4);
    benchmark::DoNotOptimize(sink);
  }
}
BENCHMARK(BM_QuasiprobPoint)->Arg(16)->Arg(32)->Arg(64);

static void BM_NcDepthLossyPhoton(benchmark::State& state) {
  const auto rho = make_lossy_photon(0.6);
  NcDepthOptions opt;
  opt.grid = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(nc_depth(rho, opt));
}
BENCHMARK(BM_NcDepthLossyPhoton)->Arg(41)->Arg(61)->Unit(benchmark::kMillisecond);

static void BM_NcDepthCoherent(benchmark::State& state) {
  const auto rho = make_coherent({1.0, 0.5}, 20).density();
  for (auto _ : state) benchmark::DoNotOptimize(nc_depth(rho));
}
BENCHMARK(BM_NcDepthCoherent)->Unit(benchmark::kMillisecond);

static void BM_BeamSplitterDensity(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto rho = tensor(make_coherent({0.8, 0.0}, d, 1e-3).density(), make_fock(1, d).density());
  for (auto _ : state) benchmark::DoNotOptimize(apply_beam_splitter(rho, 0.4));
}
BENCHMARK(BM_BeamSplitterDensity)->Arg(6)->Arg(10)->Arg(14)->Unit(benchmark::kMicrosecond);

static void BM_OutputMaxCoherence(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto phi = random_channel(d, d, d, 7);
  EtaOptions opt;
  opt.starts = 8;
  for (auto _ : state) benchmark::DoNotOptimize(output_max_coherence(phi, opt).best);
}
BENCHMARK(BM_OutputMaxCoherence)->Arg(2)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_MetrologicalPower(benchmark::State& state) {
  const auto rho = make_cat({2.0, 0.0}, 40).density();
  for (auto _ : state) benchmark::DoNotOptimize(metrological_power(rho));
}
BENCHMARK(BM_MetrologicalPower)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
