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

#include <vector>

#include "mixkws/model.hpp"
#include "mixkws/rng.hpp"

using namespace mixkws;

namespace {

std::vector<FeatureMatrix> batch(int n) {
  Rng rng(1);
  std::vector<FeatureMatrix> out(static_cast<std::size_t>(n));
  for (auto& f : out) {
    f.frames.resize(98, kNumMelBins);
    for (Eigen::Index i = 0; i < f.frames.size(); ++i) f.frames.data()[i] = rng.normal();
  }
  return out;
}

}  // namespace

static void BM_Forward(benchmark::State& state) {
  const ModelState s = create_model({}, 8, 1);
  const auto x = batch(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(forward(s, x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(32);

static void BM_ForwardBackward(benchmark::State& state) {
  const ModelState s = create_model({}, 8, 1);
  const auto x = batch(static_cast<int>(state.range(0)));
  const Matrix t = Matrix::Zero(state.range(0), 8);
  for (auto _ : state) {
    ForwardCache cache;
    const Matrix logits = forward(s, x, &cache);
    benchmark::DoNotOptimize(backward(s, cache, bce_loss(logits, t).grad));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(32);

BENCHMARK_MAIN();
