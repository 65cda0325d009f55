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

#include "mixkws/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <string>

#include "mixkws/error.hpp"
#include "mixkws/parallel.hpp"
#include "mixkws/rng.hpp"

namespace mixkws {

FeatureMatrix model_input(const Waveform& x, const FeatureStats& stats, const FbankOptions& opts) {
  return mean_var_normalize(fbank(x, opts), stats);
}

FeatureStats pool_feature_stats(std::span<const LabeledExample> pool, const FbankOptions& opts,
                                int workers) {
  std::vector<FeatureMatrix> raw(pool.size());
  parallel_for(pool.size(), workers, [&](std::size_t i) { raw[i] = fbank(*pool[i].audio, opts); });
  return compute_feature_stats(raw);
}

TrainResult train(const ModelState& initial, std::span<const LabeledExample> pool,
                  const StrategyConfig& strategy, const TrainOptions& opts) {
  validate_state(initial);
  require(opts.epochs >= 0, ErrorKind::kInvalidArgument, "epochs must be non-negative");
  require(opts.batch_size > 0, ErrorKind::kInvalidArgument, "batch_size must be positive");
  require(opts.average_last > 0, ErrorKind::kInvalidArgument, "average_last must be positive");
  require(opts.learning_rate > 0.0, ErrorKind::kInvalidArgument, "learning rate must be positive");

  TrainResult result{initial, {}};
  if (opts.epochs == 0) return result;

  const int num_keywords = initial.num_keywords;
  check_pool(strategy, pool, num_keywords);

  ModelState state = initial;
  if (state.feature_stats.empty()) {
    state.feature_stats = pool_feature_stats(pool, opts.fbank, opts.workers);
  }
  const bool frozen = state.backbone_frozen();
  const std::size_t n = pool.size();

  // Clean inputs never change, so their features (and, with a frozen
  // backbone, their embeddings) are computed once.
  std::vector<FeatureMatrix> clean_features(n);
  parallel_for(n, opts.workers, [&](std::size_t i) {
    clean_features[i] = model_input(*pool[i].audio, state.feature_stats, opts.fbank);
  });
  std::vector<Vector> clean_embeddings;
  if (frozen) {
    clean_embeddings.resize(n);
    parallel_for(n, opts.workers,
                 [&](std::size_t i) { clean_embeddings[i] = embed(state, clean_features[i]); });
  }

  std::deque<ModelState> recent;
  std::vector<std::size_t> order(n);
  const auto batch_size = static_cast<std::size_t>(opts.batch_size);

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(opts.seed, {static_cast<std::uint64_t>(epoch), 0x53485546}));
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());

    double loss_sum = 0.0;
    std::size_t mixed = 0;
    for (std::size_t start = 0, batch = 0; start < n; start += batch_size, ++batch) {
      const std::size_t rows = std::min(batch_size, n - start);
      std::vector<PairPlan> plans(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        const std::uint64_t draw = static_cast<std::uint64_t>(epoch) * n + start + r;
        Rng rng(derive_seed(strategy.seed, {draw}));
        plans[r] = plan_pair(strategy, pool, num_keywords, order[start + r], rng);
        mixed += plans[r].mix.has_value();
      }

      Matrix targets(static_cast<Eigen::Index>(rows), num_keywords);
      for (std::size_t r = 0; r < rows; ++r) {
        for (int k = 0; k < num_keywords; ++k) {
          targets(static_cast<Eigen::Index>(r), k) = plans[r].label.values[static_cast<std::size_t>(k)];
        }
      }

      ForwardCache cache;
      Matrix logits;
      if (frozen) {
        std::vector<Vector> inputs(rows);
        parallel_for(rows, opts.workers, [&](std::size_t r) {
          const PairPlan& p = plans[r];
          inputs[r] = p.mix ? embed(state, model_input(render_pair(pool, p), state.feature_stats,
                                                       opts.fbank))
                            : clean_embeddings[p.anchor];
        });
        logits = forward_from_embeddings(state, inputs, &cache);
      } else {
        std::vector<FeatureMatrix> inputs(rows);
        parallel_for(rows, opts.workers, [&](std::size_t r) {
          const PairPlan& p = plans[r];
          inputs[r] = p.mix ? model_input(render_pair(pool, p), state.feature_stats, opts.fbank)
                            : clean_features[p.anchor];
        });
        logits = forward(state, inputs, &cache, opts.workers);
      }

      if (!logits.allFinite()) {
        fail(ErrorKind::kDivergence, "non-finite logits at epoch " + std::to_string(epoch) +
                                         ", batch " + std::to_string(batch));
      }
      const LossResult loss = bce_loss(logits, targets);
      if (!std::isfinite(loss.loss)) {
        fail(ErrorKind::kDivergence, "non-finite loss at epoch " + std::to_string(epoch) +
                                         ", batch " + std::to_string(batch));
      }
      loss_sum += loss.loss * static_cast<double>(rows);
      const Vector grads = backward(state, cache, loss.grad, opts.workers);
      if (!grads.allFinite()) {
        fail(ErrorKind::kDivergence, "non-finite gradient at epoch " + std::to_string(epoch) +
                                         ", batch " + std::to_string(batch));
      }
      adam_step(state, grads, opts.learning_rate);
    }

    result.log.push_back({epoch, loss_sum / static_cast<double>(n), mixed});
    recent.push_back(state);
    if (recent.size() > static_cast<std::size_t>(opts.average_last)) recent.pop_front();
  }

  std::vector<ModelState> snapshots(recent.begin(), recent.end());
  result.model = average_checkpoints(snapshots);
  return result;
}

}  // namespace mixkws
