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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mixkws/features.hpp"
#include "mixkws/model.hpp"
#include "mixkws/strategy.hpp"

namespace mixkws {

struct TrainOptions {
  int epochs = 50;
  double learning_rate = 1e-3;
  int batch_size = 32;
  // Number of trailing per-epoch checkpoints averaged into the final model.
  int average_last = 10;
  // Seeds the per-epoch shuffles; pair construction uses the strategy seed.
  std::uint64_t seed = 0;
  int workers = 1;
  FbankOptions fbank;
};

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
  std::size_t mixed_examples = 0;
};

struct TrainResult {
  ModelState model;
  std::vector<EpochLog> log;
};

// Model input for a waveform: log-mel features normalized with the model's
// statistics.
FeatureMatrix model_input(const Waveform& x, const FeatureStats& stats,
                          const FbankOptions& opts = {});

// Feature statistics over the clean examples of a pool.
FeatureStats pool_feature_stats(std::span<const LabeledExample> pool,
                                const FbankOptions& opts = {}, int workers = 1);

// Runs `epochs` passes over the pool. Every epoch visits each example once as
// the anchor of a strategy-built draw (shuffled, fixed-size batches, Adam),
// and ends with a checkpoint; the result is the average of the last
// min(average_last, epochs) checkpoints. Missing feature statistics are
// computed from the pool first. Output is a pure function of the inputs,
// independent of `workers`. Throws Error(kDivergence) naming the epoch and
// batch if the loss stops being finite.
TrainResult train(const ModelState& initial, std::span<const LabeledExample> pool,
                  const StrategyConfig& strategy, const TrainOptions& opts);

}  // namespace mixkws
