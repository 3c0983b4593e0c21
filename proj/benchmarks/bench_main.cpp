#include <benchmark/benchmark.h>

#include "urns/gaussian_limit.hpp"
#include "urns/spectral_cdf.hpp"
#include "urns/urn_model.hpp"

namespace {

void BM_SamplerDraw(benchmark::State& state) {
  const urns::UrnSampler sampler(urns::zipf_law(0.5, urns::tail_safe_support(0.5, 100000)));
  urns::Engine engine = urns::make_engine(1);
  for (auto _ : state) benchmark::DoNotOptimize(sampler.draw(engine));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SamplerDraw);

void BM_ForwardCounts(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const urns::Stream s = urns::sample_stream(urns::zipf_law(0.5, urns::tail_safe_support(0.5, n)), n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(urns::forward_counts(s));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ForwardCounts)->Arg(10000)->Arg(100000);

void BM_Nystrom(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(urns::nystrom_eigs(0.5, urns::Variant::known, nullptr, m, 64));
}
BENCHMARK(BM_Nystrom)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_SmirnovCdf(benchmark::State& state) {
  const auto model = urns::nystrom_eigs(0.5, urns::Variant::known, nullptr, 256, 64);
  for (auto _ : state) benchmark::DoNotOptimize(urns::smirnov_cdf(model, 0.3));
}
BENCHMARK(BM_SmirnovCdf)->Unit(benchmark::kMicrosecond);

void BM_LimitW2Sample(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(urns::limit_w2_sample(0.5, urns::Variant::known, nullptr, 256, 1000, 3));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_LimitW2Sample)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
