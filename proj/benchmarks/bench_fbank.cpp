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

#include <cmath>
#include <numbers>

#include "mixkws/features.hpp"

using namespace mixkws;

static void BM_Fbank(benchmark::State& state) {
  Waveform x;
  x.samples.resize(static_cast<std::size_t>(state.range(0)));
  for (std::size_t t = 0; t < x.size(); ++t) {
    x.samples[t] = 0.4 * std::sin(2.0 * std::numbers::pi * 440.0 * t / 16000.0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(fbank(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Fbank)->Arg(16000)->Arg(160000);

static void BM_Filterbank(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(MelFilterbank(FbankOptions{}));
}
BENCHMARK(BM_Filterbank);

BENCHMARK_MAIN();
