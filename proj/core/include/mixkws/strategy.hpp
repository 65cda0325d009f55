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

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mixkws/rng.hpp"
#include "mixkws/signal.hpp"

namespace mixkws {

enum class StrategyKind { kClean, kMixup, kMixTraining };

// "clean" | "mixup" | "mt"
std::string_view strategy_name(StrategyKind kind);
StrategyKind parse_strategy(std::string_view name);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::kClean;
  // Mix-training only: probability that a draw is left un-mixed.
  double clean_fraction = 0.5;
  // Mixup only: symmetric Beta(alpha, alpha) for the interpolation factor.
  double mixup_alpha = 0.2;
  std::uint64_t seed = 0;
};

// Per-keyword targets: one-hot for clean examples, k-hot for mix-training
// mixtures, interpolated for Mixup.
struct LabelVector {
  std::vector<double> values;

  static LabelVector one_hot(int keyword, int num_keywords);
  std::size_t size() const { return values.size(); }
  int num_nonzero() const;

  friend bool operator==(const LabelVector&, const LabelVector&) = default;
};

// Elementwise logical OR of two binary label vectors.
LabelVector label_union(const LabelVector& a, const LabelVector& b);

// lambda * a + (1 - lambda) * b.
LabelVector mixup_label(const LabelVector& a, const LabelVector& b, double lambda);

// One draw from Beta(alpha, alpha).
double sample_mixup_lambda(Rng& rng, double alpha = 0.2);

struct LabeledExample {
  std::shared_ptr<const Waveform> audio;
  int keyword = 0;
};

// How one training example was assembled from the pool.
struct MixSpec {
  std::size_t partner = 0;
  MixWeights weights;
};

// A training draw before rendering: the anchor example, an optional partner
// and the resulting label.
struct PairPlan {
  std::size_t anchor = 0;
  std::optional<MixSpec> mix;
  LabelVector label;
};

struct TrainingPair {
  Waveform audio;
  LabelVector label;
  std::optional<MixSpec> mix;
};

// Decides how the draw built around `anchor` is formed under the strategy.
// Mixing partners always carry a different keyword from the anchor.
PairPlan plan_pair(const StrategyConfig& config, std::span<const LabeledExample> pool,
                   int num_keywords, std::size_t anchor, Rng& rng);

Waveform render_pair(std::span<const LabeledExample> pool, const PairPlan& plan);

// Draw number `draw_index` of the strategy's stream: uniform anchor, then
// plan_pair and render. Identical (config, draw_index) give identical pairs.
TrainingPair make_training_pair(const StrategyConfig& config,
                                std::span<const LabeledExample> pool, int num_keywords,
                                std::uint64_t draw_index);

// Throws unless the pool can serve the strategy (non-empty, keywords in
// range, at least two keywords when mixing is possible).
void check_pool(const StrategyConfig& config, std::span<const LabeledExample> pool,
                int num_keywords);

}  // namespace mixkws
