// Copyright 2026 The ricker-approx Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "ricker/model.hpp"
#include "ricker/region.hpp"
#include "ricker/statistics.hpp"
#include "ricker/surrogate.hpp"

namespace {

using namespace ricker;

const Theta kTheta{3.6, 0.3, 10.0};

const SurrogateEntry& entry() {
  static const SurrogateEntry e = build_entry(3.6, 0.3, 100, 2000, 0.99, RandomStream(1));
  return e;
}

void BM_SimulateSeries(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const RandomStream root(2);
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_series(kTheta, n, root.derive(i++)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n + kDefaultBurnIn));
}
BENCHMARK(BM_SimulateSeries)->Arg(100)->Arg(500);

void BM_PoissonDraw(benchmark::State& state) {
  const double lambda = static_cast<double>(state.range(0));
  RandomStream rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(poisson_draw(lambda, rng));
}
BENCHMARK(BM_PoissonDraw)->Arg(3)->Arg(30)->Arg(3000);

void BM_DynamicsFit(benchmark::State& state) {
  const auto series = simulate_series(kTheta, static_cast<std::size_t>(state.range(0)), RandomStream(4));
  for (auto _ : state) benchmark::DoNotOptimize(dynamics_fit(series, kTheta.phi));
}
BENCHMARK(BM_DynamicsFit)->Arg(100)->Arg(500);

void BM_Kolmogorov(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto series = simulate_series(kTheta, n, RandomStream(5));
  const auto reference = reference_sample(entry(), kTheta.phi, 100);
  for (auto _ : state) benchmark::DoNotOptimize(kolmogorov_distance(series.counts, reference));
}
BENCHMARK(BM_Kolmogorov)->Arg(100);

void BM_Assess(benchmark::State& state) {
  const auto data = simulate_series(kTheta, 100, RandomStream(6));
  const auto sims = static_cast<std::size_t>(state.range(0));
  std::uint64_t i = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(assess(kTheta, data, entry(), 0.9, sims, kDefaultDelta, RandomStream(i++)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sims));
}
BENCHMARK(BM_Assess)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_BuildEntry(benchmark::State& state) {
  std::uint64_t i = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(build_entry(3.6, 0.3, 100, static_cast<std::size_t>(state.range(0)), 0.99, RandomStream(i++)));
}
BENCHMARK(BM_BuildEntry)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
