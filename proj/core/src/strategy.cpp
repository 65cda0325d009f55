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

#include "mixkws/strategy.hpp"

#include <cmath>
#include <string>

#include "mixkws/error.hpp"

namespace mixkws {

std::string_view strategy_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kClean: return "clean";
    case StrategyKind::kMixup: return "mixup";
    case StrategyKind::kMixTraining: return "mt";
  }
  return "?";
}

StrategyKind parse_strategy(std::string_view name) {
  if (name == "clean") return StrategyKind::kClean;
  if (name == "mixup") return StrategyKind::kMixup;
  if (name == "mt") return StrategyKind::kMixTraining;
  fail(ErrorKind::kInvalidArgument,
       "unknown strategy '" + std::string(name) + "' (expected clean, mixup or mt)");
}

LabelVector LabelVector::one_hot(int keyword, int num_keywords) {
  require(num_keywords > 0 && keyword >= 0 && keyword < num_keywords,
          ErrorKind::kInvalidArgument,
          "keyword " + std::to_string(keyword) + " outside [0, " +
              std::to_string(num_keywords) + ")");
  LabelVector y;
  y.values.assign(static_cast<std::size_t>(num_keywords), 0.0);
  y.values[static_cast<std::size_t>(keyword)] = 1.0;
  return y;
}

int LabelVector::num_nonzero() const {
  int n = 0;
  for (double v : values) n += v != 0.0;
  return n;
}

LabelVector label_union(const LabelVector& a, const LabelVector& b) {
  require(a.size() == b.size(), ErrorKind::kShape,
          "label length mismatch: " + std::to_string(a.size()) + " vs " +
              std::to_string(b.size()));
  LabelVector out;
  out.values.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a.values[i];
    const double y = b.values[i];
    require((x == 0.0 || x == 1.0) && (y == 0.0 || y == 1.0), ErrorKind::kInvalidArgument,
            "label union needs binary labels, got " + std::to_string(x) + " and " +
                std::to_string(y) + " at index " + std::to_string(i));
    out.values[i] = (x == 1.0 || y == 1.0) ? 1.0 : 0.0;
  }
  return out;
}

LabelVector mixup_label(const LabelVector& a, const LabelVector& b, double lambda) {
  require(a.size() == b.size(), ErrorKind::kShape,
          "label length mismatch: " + std::to_string(a.size()) + " vs " +
              std::to_string(b.size()));
  require(lambda >= 0.0 && lambda <= 1.0, ErrorKind::kInvalidArgument,
          "mixup lambda outside [0, 1]: " + std::to_string(lambda));
  LabelVector out;
  out.values.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.values[i] = lambda * a.values[i] + (1.0 - lambda) * b.values[i];
  }
  return out;
}

double sample_mixup_lambda(Rng& rng, double alpha) { return rng.beta(alpha, alpha); }

void check_pool(const StrategyConfig& config, std::span<const LabeledExample> pool,
                int num_keywords) {
  require(!pool.empty(), ErrorKind::kInvalidArgument, "training pool is empty");
  require(num_keywords > 0, ErrorKind::kInvalidArgument, "need at least one keyword");
  int first = pool.front().keyword;
  bool several = false;
  for (const auto& ex : pool) {
    require(ex.audio != nullptr, ErrorKind::kInvalidArgument, "pool entry without audio");
    require(ex.keyword >= 0 && ex.keyword < num_keywords, ErrorKind::kInvalidArgument,
            "pool keyword " + std::to_string(ex.keyword) + " outside [0, " +
                std::to_string(num_keywords) + ")");
    several = several || ex.keyword != first;
  }
  const bool mixes = config.kind == StrategyKind::kMixup ||
                     (config.kind == StrategyKind::kMixTraining && config.clean_fraction < 1.0);
  require(!mixes || several, ErrorKind::kInvalidArgument,
          std::string(strategy_name(config.kind)) +
              " mixing needs at least two distinct keywords in the pool");
  require(config.clean_fraction >= 0.0 && config.clean_fraction <= 1.0,
          ErrorKind::kInvalidArgument, "clean_fraction must lie in [0, 1]");
}

namespace {

std::size_t draw_partner(std::span<const LabeledExample> pool, std::size_t anchor, Rng& rng) {
  for (;;) {
    const std::size_t j = rng.index(pool.size());
    if (pool[j].keyword != pool[anchor].keyword) return j;
  }
}

}  // namespace

PairPlan plan_pair(const StrategyConfig& config, std::span<const LabeledExample> pool,
                   int num_keywords, std::size_t anchor, Rng& rng) {
  require(anchor < pool.size(), ErrorKind::kInvalidArgument, "anchor index out of range");
  PairPlan plan;
  plan.anchor = anchor;
  const LabelVector anchor_label = LabelVector::one_hot(pool[anchor].keyword, num_keywords);

  switch (config.kind) {
    case StrategyKind::kClean:
      plan.label = anchor_label;
      break;
    case StrategyKind::kMixup: {
      const std::size_t partner = draw_partner(pool, anchor, rng);
      const double lambda = sample_mixup_lambda(rng, config.mixup_alpha);
      plan.mix = MixSpec{partner, {lambda, 1.0 - lambda}};
      plan.label = mixup_label(anchor_label,
                               LabelVector::one_hot(pool[partner].keyword, num_keywords), lambda);
      break;
    }
    case StrategyKind::kMixTraining: {
      if (rng.uniform() < config.clean_fraction) {
        plan.label = anchor_label;
        break;
      }
      const std::size_t partner = draw_partner(pool, anchor, rng);
      plan.mix = MixSpec{partner, sample_mt_weights(rng)};
      plan.label = label_union(anchor_label,
                               LabelVector::one_hot(pool[partner].keyword, num_keywords));
      break;
    }
  }
  return plan;
}

Waveform render_pair(std::span<const LabeledExample> pool, const PairPlan& plan) {
  const Waveform& a = *pool[plan.anchor].audio;
  if (!plan.mix) return a;
  return mix_waveforms(a, *pool[plan.mix->partner].audio, plan.mix->weights);
}

TrainingPair make_training_pair(const StrategyConfig& config,
                                std::span<const LabeledExample> pool, int num_keywords,
                                std::uint64_t draw_index) {
  check_pool(config, pool, num_keywords);
  Rng rng(derive_seed(config.seed, {draw_index}));
  const std::size_t anchor = rng.index(pool.size());
  PairPlan plan = plan_pair(config, pool, num_keywords, anchor, rng);
  TrainingPair pair;
  pair.audio = render_pair(pool, plan);
  pair.label = std::move(plan.label);
  pair.mix = plan.mix;
  return pair;
}

}  // namespace mixkws
