#include "bootlin/bootstrap.hpp"

#include <benchmark/benchmark.h>

using namespace bootlin;

namespace {

Sample
normal_sample(std::size_t n)
{
  RngStream root(1);
  RngStream s = root.derive(0);
  return Sample(s.standard_normal(n));
}

void
BM_StreamU64(benchmark::State& state)
{
  RngStream s = RngStream(1).derive(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(s.next_u64());
  }
}
BENCHMARK(BM_StreamU64);

void
BM_StandardNormal(benchmark::State& state)
{
  RngStream s = RngStream(1).derive(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(s.next_standard_normal());
  }
}
BENCHMARK(BM_StandardNormal);

void
BM_IntegralOfSquare(benchmark::State& state)
{
  const Sample s = normal_sample(static_cast<std::size_t>(state.range(0)));
  const DensityEstimate d = fit(s, Kernel(KernelId::gauss), 0.3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(integral_of_square(d));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_IntegralOfSquare)->Range(64, 2048)->Complexity();

void
BM_Replicates(benchmark::State& state)
{
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const Sample s = normal_sample(n);
  const double h = select_bandwidth(BandwidthRule::silverman(), s);
  const DensityEstimate d = fit(s, Kernel(KernelId::gauss), h);
  const RngStream root(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
      run_replicates(Construction::onestep, d, s,
                     BootstrapScheme::smooth_fitted(),
                     NuisancePolicy::refit_frozen, 16, root));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Replicates)->Arg(200)->Arg(1000)->Arg(2000)->Unit(
  benchmark::kMillisecond);

void
BM_TmleTarget(benchmark::State& state)
{
  const Sample s = normal_sample(500);
  const double h = select_bandwidth(BandwidthRule::silverman(), s);
  const DensityEstimate d = fit(s, Kernel(KernelId::gauss), h);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tmle_target(d, s));
  }
}
BENCHMARK(BM_TmleTarget)->Unit(benchmark::kMillisecond);

} // namespace
