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
#include <span>
#include <string>
#include <vector>

#include "mixkws/features.hpp"

namespace mixkws {

// One 3x3 convolution (padding 1) followed by ReLU.
struct ConvBlockSpec {
  int out_channels = 16;
  int stride = 2;

  friend bool operator==(const ConvBlockSpec&, const ConvBlockSpec&) = default;
};

struct BackboneConfig {
  std::vector<ConvBlockSpec> blocks{{16, 2}, {32, 2}, {64, 2}};
  int embedding_dim = 64;
  int input_dim = kNumMelBins;

  friend bool operator==(const BackboneConfig&, const BackboneConfig&) = default;
};

void validate_backbone_config(const BackboneConfig& config);

// kLinear: embedding -> K (pre-training).
// kTwoLayer: embedding -> hidden -> ReLU -> K (fine-tuning).
enum class HeadKind { kLinear, kTwoLayer };

// A named slice of the flat parameter vector.
struct ParamBlock {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
  bool backbone = false;
  bool frozen = false;

  friend bool operator==(const ParamBlock&, const ParamBlock&) = default;
};

// Backbone + head parameters, Adam moments and the feature statistics the
// model was trained with. Parameters of all blocks live in one flat vector
// laid out by `blocks`.
struct ModelState {
  BackboneConfig config;
  HeadKind head_kind = HeadKind::kLinear;
  int num_keywords = 0;
  int head_hidden = 0;
  std::vector<ParamBlock> blocks;
  Vector params;
  Vector adam_m;
  Vector adam_v;
  std::uint64_t adam_step = 0;
  FeatureStats feature_stats;
  // Bumped on every parameter update; forward caches remember it so that a
  // backward pass against modified parameters is rejected. Not persisted.
  std::uint64_t version = 0;

  std::size_t num_params() const { return static_cast<std::size_t>(params.size()); }
  const ParamBlock& block(const std::string& name) const;
  bool backbone_frozen() const;
  void set_backbone_frozen(bool frozen);
  // Hash of the backbone parameter bytes.
  std::uint64_t backbone_hash() const;
};

// Gives the state a fresh version so existing forward caches become stale.
void mark_modified(ModelState& state);

// Throws Error(kShape) if the block table, parameter count and moment sizes
// are inconsistent.
void validate_state(const ModelState& state);

// Fresh pre-training model: He-uniform conv weights, zero conv biases,
// uniform(+-1/sqrt(fan_in)) linear layers, linear head with K outputs.
ModelState create_model(const BackboneConfig& config, int num_keywords, std::uint64_t seed);

// Discards the head, installs a two-layer head (embedding -> hidden ->
// new_num_keywords, hidden = embedding_dim) with uniform(+-1/sqrt(fan_in))
// init, freezes the backbone and resets the optimizer. Backbone parameters
// are copied bit-for-bit.
ModelState reinit_head(const ModelState& state, int new_num_keywords, std::uint64_t seed);

// Per-example activations kept for the backward pass.
struct ExampleCache {
  struct ConvLayer {
    int in_h = 0, in_w = 0, out_h = 0, out_w = 0;
    Matrix columns;     // im2col of the layer input, (C_in*9) x (out_h*out_w)
    Matrix activation;  // post-ReLU output, C_out x (out_h*out_w)
  };
  std::vector<ConvLayer> conv;
  Vector pooled;
  Vector embedding;
  Vector hidden_pre;  // two-layer head only
  Vector hidden;
};

struct ForwardCache {
  std::uint64_t state_version = 0;
  const ModelState* state = nullptr;
  std::vector<ExampleCache> rows;
};

// Backbone output for one input.
Vector embed(const ModelState& state, const FeatureMatrix& input,
             ExampleCache* cache = nullptr);

// Head output for one embedding.
Vector head_logits(const ModelState& state, const Vector& embedding,
                   ExampleCache* cache = nullptr);

// Logits for a batch, one row per input. Inputs must have 80 columns and at
// least one frame; rows are computed independently. When cache is non-null
// it receives the activations needed by backward().
Matrix forward(const ModelState& state, std::span<const FeatureMatrix> batch,
               ForwardCache* cache = nullptr, int workers = 1);

// Logits from precomputed embeddings (head only).
Matrix forward_from_embeddings(const ModelState& state, std::span<const Vector> embeddings,
                               ForwardCache* cache = nullptr);

struct LossResult {
  double loss = 0.0;
  Matrix grad;  // d loss / d logits
};

// Mean binary cross-entropy over all batch x keyword entries with
// probabilities clamped to [1e-7, 1 - 1e-7]. The gradient is
// (sigmoid(z) - t) / (N * K).
LossResult bce_loss(const Matrix& logits, const Matrix& targets);

inline constexpr double kProbabilityClamp = 1e-7;

double sigmoid(double z);

// Gradient of the loss with respect to every parameter, given the cache from
// forward() on the same batch and d loss / d logits. Frozen blocks receive
// zeros. Per-row gradients are combined by a fixed pairwise reduction, so the
// result does not depend on `workers`.
Vector backward(const ModelState& state, const ForwardCache& cache, const Matrix& grad_logits,
                int workers = 1);

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected Adam update of every unfrozen block. Frozen blocks and
// their moments are left untouched. Throws Error(kNumeric) on non-finite
// gradients.
void adam_step(ModelState& state, const Vector& grads, double learning_rate,
               const AdamOptions& opts = {});

// Elementwise parameter mean; moments and step counter come from the last
// checkpoint. All inputs must share the block table and feature statistics.
ModelState average_checkpoints(std::span<const ModelState> checkpoints);

// Sums vectors with a balanced pairwise tree in index order.
Vector pairwise_sum(std::span<const Vector> parts);

}  // namespace mixkws
