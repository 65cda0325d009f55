// Copyright 2026 The mixkws Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "mixkws/eval.hpp"
#include "mixkws/rng.hpp"

using namespace mixkws;

static void BM_Eer(benchmark::State& state) {
  Rng rng(3);
  DetectionLog log;
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    const bool target = i % 8 == 0;
    log.push_back({static_cast<std::uint64_t>(i), 0, rng.normal() + (target ? 1.5 : 0.0), target});
  }
  for (auto _ : state) benchmark::DoNotOptimize(compute_eer(log));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Eer)->Arg(1000)->Arg(100000);

static void BM_TopK(benchmark::State& state) {
  Rng rng(4);
  Matrix scores(2000, 8);
  std::vector<std::vector<int>> truth;
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    for (int c = 0; c < 8; ++c) scores(r, c) = rng.uniform();
    truth.push_back({static_cast<int>(r % 8), static_cast<int>((r + 1) % 8)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(topk_accuracy(scores, truth, 2));
}
BENCHMARK(BM_TopK);

BENCHMARK_MAIN();
