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

#include "mixkws/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "mixkws/error.hpp"
#include "mixkws/hash.hpp"
#include "mixkws/parallel.hpp"
#include "mixkws/rng.hpp"

namespace mixkws {

namespace {

using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using VectorMap = Eigen::Map<Vector>;
using ConstVectorMap = Eigen::Map<const Vector>;

std::uint64_t next_version() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

int conv_out(int in, int stride) { return (in - 1) / stride + 1; }

std::size_t product(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

void add_block(ModelState& s, std::string name, std::vector<int> shape, bool backbone) {
  ParamBlock b;
  b.name = std::move(name);
  b.size = product(shape);
  b.shape = std::move(shape);
  b.offset = s.blocks.empty() ? 0 : s.blocks.back().offset + s.blocks.back().size;
  b.backbone = backbone;
  s.blocks.push_back(std::move(b));
}

std::size_t total_size(const ModelState& s) {
  return s.blocks.empty() ? 0 : s.blocks.back().offset + s.blocks.back().size;
}

void fill_uniform(Vector& params, const ParamBlock& b, double bound, Rng& rng) {
  for (std::size_t i = 0; i < b.size; ++i) {
    params[static_cast<Eigen::Index>(b.offset + i)] = rng.uniform(-bound, bound);
  }
}

ConstMatrixMap weight(const ModelState& s, const ParamBlock& b) {
  return ConstMatrixMap(s.params.data() + b.offset, b.shape[0],
                        static_cast<Eigen::Index>(b.size) / b.shape[0]);
}

ConstVectorMap bias(const ModelState& s, const ParamBlock& b) {
  return ConstVectorMap(s.params.data() + b.offset, static_cast<Eigen::Index>(b.size));
}

MatrixMap weight_grad(Vector& g, const ParamBlock& b) {
  return MatrixMap(g.data() + b.offset, b.shape[0], static_cast<Eigen::Index>(b.size) / b.shape[0]);
}

VectorMap bias_grad(Vector& g, const ParamBlock& b) {
  return VectorMap(g.data() + b.offset, static_cast<Eigen::Index>(b.size));
}

// Column matrix for a 3x3, pad-1 convolution. Row index c*9 + ky*3 + kx
// matches the row-major layout of the weight block.
void im2col(const Matrix& input, int h, int w, int stride, int out_h, int out_w, Matrix& cols) {
  const auto channels = input.rows();
  cols.setZero(channels * 9, static_cast<Eigen::Index>(out_h) * out_w);
  for (Eigen::Index c = 0; c < channels; ++c) {
    const double* src = input.row(c).data();
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        double* dst = cols.row(c * 9 + ky * 3 + kx).data();
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride + ky - 1;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride + kx - 1;
            if (ix < 0 || ix >= w) continue;
            dst[oy * out_w + ox] = src[iy * w + ix];
          }
        }
      }
    }
  }
}

void col2im(const Matrix& cols, int channels, int h, int w, int stride, int out_h, int out_w,
            Matrix& input_grad) {
  input_grad.setZero(channels, static_cast<Eigen::Index>(h) * w);
  for (int c = 0; c < channels; ++c) {
    double* dst = input_grad.row(c).data();
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const double* src = cols.row(c * 9 + ky * 3 + kx).data();
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride + ky - 1;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride + kx - 1;
            if (ix < 0 || ix >= w) continue;
            dst[iy * w + ix] += src[oy * out_w + ox];
          }
        }
      }
    }
  }
}

void check_input(const ModelState& state, const FeatureMatrix& input) {
  require(input.dim() == state.config.input_dim, ErrorKind::kShape,
          "model expects " + std::to_string(state.config.input_dim) +
              "-dimensional features, got " + std::to_string(input.dim()));
  require(input.num_frames() > 0, ErrorKind::kShape, "input has no frames");
}

Vector example_gradient(const ModelState& state, const ExampleCache& row,
                        const Eigen::Ref<const Vector>& dz) {
  Vector g = Vector::Zero(static_cast<Eigen::Index>(state.num_params()));
  Vector de;
  if (state.head_kind == HeadKind::kLinear) {
    const ParamBlock& w = state.block("head.weight");
    const ParamBlock& b = state.block("head.bias");
    if (!w.frozen) weight_grad(g, w).noalias() = dz * row.embedding.transpose();
    if (!b.frozen) bias_grad(g, b) = dz;
    de.noalias() = weight(state, w).transpose() * dz;
  } else {
    const ParamBlock& w1 = state.block("head1.weight");
    const ParamBlock& b1 = state.block("head1.bias");
    const ParamBlock& w2 = state.block("head2.weight");
    const ParamBlock& b2 = state.block("head2.bias");
    if (!w2.frozen) weight_grad(g, w2).noalias() = dz * row.hidden.transpose();
    if (!b2.frozen) bias_grad(g, b2) = dz;
    Vector dh = weight(state, w2).transpose() * dz;
    for (Eigen::Index i = 0; i < dh.size(); ++i) {
      if (row.hidden_pre[i] <= 0.0) dh[i] = 0.0;
    }
    if (!w1.frozen) weight_grad(g, w1).noalias() = dh * row.embedding.transpose();
    if (!b1.frozen) bias_grad(g, b1) = dh;
    de.noalias() = weight(state, w1).transpose() * dh;
  }
  if (state.backbone_frozen()) return g;

  require(row.conv.size() == state.config.blocks.size(), ErrorKind::kInvalidArgument,
          "forward cache lacks backbone activations");
  const ParamBlock& ew = state.block("embed.weight");
  const ParamBlock& eb = state.block("embed.bias");
  if (!ew.frozen) weight_grad(g, ew).noalias() = de * row.pooled.transpose();
  if (!eb.frozen) bias_grad(g, eb) = de;
  const Vector dpooled = weight(state, ew).transpose() * de;

  const auto& last = row.conv.back();
  const double area = static_cast<double>(last.activation.cols());
  Matrix dact = (dpooled / area).replicate(1, last.activation.cols());

  Matrix dcols;
  Matrix dinput;
  for (std::size_t l = row.conv.size(); l-- > 0;) {
    const auto& layer = row.conv[l];
    const ParamBlock& w = state.block("conv" + std::to_string(l) + ".weight");
    const ParamBlock& b = state.block("conv" + std::to_string(l) + ".bias");
    Matrix dpre = (layer.activation.array() > 0.0).select(dact, 0.0);
    if (!w.frozen) weight_grad(g, w).noalias() = dpre * layer.columns.transpose();
    if (!b.frozen) bias_grad(g, b) = dpre.rowwise().sum();
    if (l == 0) break;
    dcols.noalias() = weight(state, w).transpose() * dpre;
    const int channels = static_cast<int>(layer.columns.rows() / 9);
    col2im(dcols, channels, layer.in_h, layer.in_w, state.config.blocks[l].stride, layer.out_h,
           layer.out_w, dinput);
    dact = std::move(dinput);
  }
  return g;
}

}  // namespace

void validate_backbone_config(const BackboneConfig& config) {
  require(!config.blocks.empty(), ErrorKind::kInvalidArgument,
          "backbone needs at least one conv block");
  for (const auto& b : config.blocks) {
    require(b.out_channels > 0 && b.stride > 0, ErrorKind::kInvalidArgument,
            "conv block needs positive channels and stride");
  }
  require(config.embedding_dim > 0, ErrorKind::kInvalidArgument,
          "embedding_dim must be positive");
  require(config.input_dim > 0, ErrorKind::kInvalidArgument, "input_dim must be positive");
}

const ParamBlock& ModelState::block(const std::string& name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return b;
  }
  fail(ErrorKind::kShape, "model has no parameter block '" + name + "'");
}

bool ModelState::backbone_frozen() const {
  for (const auto& b : blocks) {
    if (b.backbone && !b.frozen) return false;
  }
  return true;
}

void ModelState::set_backbone_frozen(bool frozen) {
  for (auto& b : blocks) {
    if (b.backbone) b.frozen = frozen;
  }
}

std::uint64_t ModelState::backbone_hash() const {
  Fnv1a64 h;
  for (const auto& b : blocks) {
    if (!b.backbone) continue;
    h.update(b.name);
    for (std::size_t i = 0; i < b.size; ++i) {
      h.update_f64(params[static_cast<Eigen::Index>(b.offset + i)]);
    }
  }
  return h.digest();
}

void mark_modified(ModelState& state) { state.version = next_version(); }

void validate_state(const ModelState& s) {
  validate_backbone_config(s.config);
  std::size_t expected = 0;
  for (const auto& b : s.blocks) {
    require(b.offset == expected && b.size == product(b.shape), ErrorKind::kShape,
            "parameter block '" + b.name + "' has an inconsistent shape table entry");
    expected += b.size;
  }
  require(s.num_params() == expected, ErrorKind::kShape,
          "parameter count " + std::to_string(s.num_params()) +
              " does not match shape table total " + std::to_string(expected));
  require(static_cast<std::size_t>(s.adam_m.size()) == expected &&
              static_cast<std::size_t>(s.adam_v.size()) == expected,
          ErrorKind::kShape, "optimizer moments do not match parameter count");
  require(s.num_keywords > 0, ErrorKind::kShape, "model has no keywords");
}

ModelState create_model(const BackboneConfig& config, int num_keywords, std::uint64_t seed) {
  validate_backbone_config(config);
  require(num_keywords > 0, ErrorKind::kInvalidArgument, "num_keywords must be positive");
  ModelState s;
  s.config = config;
  s.head_kind = HeadKind::kLinear;
  s.num_keywords = num_keywords;
  int in_channels = 1;
  for (std::size_t l = 0; l < config.blocks.size(); ++l) {
    const int out = config.blocks[l].out_channels;
    add_block(s, "conv" + std::to_string(l) + ".weight", {out, in_channels, 3, 3}, true);
    add_block(s, "conv" + std::to_string(l) + ".bias", {out}, true);
    in_channels = out;
  }
  add_block(s, "embed.weight", {config.embedding_dim, in_channels}, true);
  add_block(s, "embed.bias", {config.embedding_dim}, true);
  add_block(s, "head.weight", {num_keywords, config.embedding_dim}, false);
  add_block(s, "head.bias", {num_keywords}, false);

  const auto n = static_cast<Eigen::Index>(total_size(s));
  s.params = Vector::Zero(n);
  s.adam_m = Vector::Zero(n);
  s.adam_v = Vector::Zero(n);

  Rng rng(derive_seed(seed, {0x494e4954}));
  for (const auto& b : s.blocks) {
    const bool is_bias = b.shape.size() == 1;
    if (b.name.starts_with("conv")) {
      if (!is_bias) fill_uniform(s.params, b, std::sqrt(6.0 / (b.shape[1] * 9)), rng);
    } else {
      const int fan_in = b.name.starts_with("embed") ? in_channels : config.embedding_dim;
      fill_uniform(s.params, b, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
    }
  }
  s.version = next_version();
  return s;
}

ModelState reinit_head(const ModelState& state, int new_num_keywords, std::uint64_t seed) {
  validate_state(state);
  require(new_num_keywords > 0, ErrorKind::kInvalidArgument, "new_num_keywords must be positive");
  ModelState s;
  s.config = state.config;
  s.head_kind = HeadKind::kTwoLayer;
  s.num_keywords = new_num_keywords;
  s.head_hidden = state.config.embedding_dim;
  s.feature_stats = state.feature_stats;
  for (const auto& b : state.blocks) {
    if (b.backbone) s.blocks.push_back(b);
  }
  const std::size_t backbone_size = total_size(s);
  const int e = state.config.embedding_dim;
  add_block(s, "head1.weight", {s.head_hidden, e}, false);
  add_block(s, "head1.bias", {s.head_hidden}, false);
  add_block(s, "head2.weight", {new_num_keywords, s.head_hidden}, false);
  add_block(s, "head2.bias", {new_num_keywords}, false);
  s.set_backbone_frozen(true);

  const auto n = static_cast<Eigen::Index>(total_size(s));
  s.params = Vector::Zero(n);
  s.params.head(static_cast<Eigen::Index>(backbone_size)) =
      state.params.head(static_cast<Eigen::Index>(backbone_size));
  s.adam_m = Vector::Zero(n);
  s.adam_v = Vector::Zero(n);
  s.adam_step = 0;

  Rng rng(derive_seed(seed, {0x48454144}));
  for (const auto& b : s.blocks) {
    if (b.backbone) continue;
    const int fan_in = b.name.starts_with("head1") ? e : s.head_hidden;
    fill_uniform(s.params, b, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
  }
  s.version = next_version();
  return s;
}

Vector embed(const ModelState& state, const FeatureMatrix& input, ExampleCache* cache) {
  check_input(state, input);
  int h = static_cast<int>(input.num_frames());
  int w = static_cast<int>(input.dim());
  // Treat the T x D feature matrix as a single-channel image.
  Matrix act = Eigen::Map<const Matrix>(input.frames.data(), 1, input.frames.size());
  Matrix cols;
  if (cache) cache->conv.resize(state.config.blocks.size());
  for (std::size_t l = 0; l < state.config.blocks.size(); ++l) {
    const int stride = state.config.blocks[l].stride;
    const int out_h = conv_out(h, stride);
    const int out_w = conv_out(w, stride);
    im2col(act, h, w, stride, out_h, out_w, cols);
    const ParamBlock& wb = state.block("conv" + std::to_string(l) + ".weight");
    const ParamBlock& bb = state.block("conv" + std::to_string(l) + ".bias");
    Matrix z;
    z.noalias() = weight(state, wb) * cols;
    z.colwise() += bias(state, bb);
    act = z.cwiseMax(0.0);
    if (cache) {
      auto& layer = cache->conv[l];
      layer.in_h = h;
      layer.in_w = w;
      layer.out_h = out_h;
      layer.out_w = out_w;
      layer.columns = std::move(cols);
      layer.activation = act;
      cols = Matrix();
    }
    h = out_h;
    w = out_w;
  }
  Vector pooled = act.rowwise().mean();
  Vector e = bias(state, state.block("embed.bias"));
  e.noalias() += weight(state, state.block("embed.weight")) * pooled;
  if (cache) {
    cache->pooled = std::move(pooled);
    cache->embedding = e;
  }
  return e;
}

Vector head_logits(const ModelState& state, const Vector& embedding, ExampleCache* cache) {
  require(embedding.size() == state.config.embedding_dim, ErrorKind::kShape,
          "embedding has dimension " + std::to_string(embedding.size()) + ", head expects " +
              std::to_string(state.config.embedding_dim));
  if (cache) cache->embedding = embedding;
  if (state.head_kind == HeadKind::kLinear) {
    Vector z = bias(state, state.block("head.bias"));
    z.noalias() += weight(state, state.block("head.weight")) * embedding;
    return z;
  }
  Vector hp = bias(state, state.block("head1.bias"));
  hp.noalias() += weight(state, state.block("head1.weight")) * embedding;
  Vector hidden = hp.cwiseMax(0.0);
  Vector z = bias(state, state.block("head2.bias"));
  z.noalias() += weight(state, state.block("head2.weight")) * hidden;
  if (cache) {
    cache->hidden_pre = std::move(hp);
    cache->hidden = std::move(hidden);
  }
  return z;
}

Matrix forward(const ModelState& state, std::span<const FeatureMatrix> batch,
               ForwardCache* cache, int workers) {
  require(!batch.empty(), ErrorKind::kShape, "empty batch");
  for (const auto& x : batch) check_input(state, x);
  Matrix logits(static_cast<Eigen::Index>(batch.size()), state.num_keywords);
  if (cache) {
    cache->rows.assign(batch.size(), ExampleCache{});
    cache->state = &state;
    cache->state_version = state.version;
  }
  parallel_for(batch.size(), workers, [&](std::size_t i) {
    ExampleCache* row = cache ? &cache->rows[i] : nullptr;
    const Vector e = embed(state, batch[i], row);
    logits.row(static_cast<Eigen::Index>(i)) = head_logits(state, e, row).transpose();
  });
  return logits;
}

Matrix forward_from_embeddings(const ModelState& state, std::span<const Vector> embeddings,
                               ForwardCache* cache) {
  require(!embeddings.empty(), ErrorKind::kShape, "empty batch");
  Matrix logits(static_cast<Eigen::Index>(embeddings.size()), state.num_keywords);
  if (cache) {
    cache->rows.assign(embeddings.size(), ExampleCache{});
    cache->state = &state;
    cache->state_version = state.version;
  }
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    ExampleCache* row = cache ? &cache->rows[i] : nullptr;
    logits.row(static_cast<Eigen::Index>(i)) = head_logits(state, embeddings[i], row).transpose();
  }
  return logits;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

LossResult bce_loss(const Matrix& logits, const Matrix& targets) {
  require(logits.rows() == targets.rows() && logits.cols() == targets.cols(), ErrorKind::kShape,
          "logits and targets differ in shape");
  require(logits.size() > 0, ErrorKind::kShape, "empty logits");
  const double count = static_cast<double>(logits.size());
  LossResult r;
  r.grad.resize(logits.rows(), logits.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    for (Eigen::Index k = 0; k < logits.cols(); ++k) {
      const double z = logits(i, k);
      const double t = targets(i, k);
      require(std::isfinite(z), ErrorKind::kNumeric, "non-finite logit in BCE loss");
      require(t >= 0.0 && t <= 1.0, ErrorKind::kInvalidArgument, "BCE target outside [0, 1]");
      const double s = sigmoid(z);
      const double p = std::clamp(s, kProbabilityClamp, 1.0 - kProbabilityClamp);
      total -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
      r.grad(i, k) = (s - t) / count;
    }
  }
  r.loss = total / count;
  return r;
}

Vector pairwise_sum(std::span<const Vector> parts) {
  require(!parts.empty(), ErrorKind::kInvalidArgument, "nothing to sum");
  if (parts.size() == 1) return parts.front();
  const std::size_t half = parts.size() / 2;
  Vector left = pairwise_sum(parts.first(half));
  left += pairwise_sum(parts.subspan(half));
  return left;
}

Vector backward(const ModelState& state, const ForwardCache& cache, const Matrix& grad_logits,
                int workers) {
  require(cache.state == &state && cache.state_version == state.version,
          ErrorKind::kInvalidArgument,
          "stale forward cache: parameters changed since the forward pass");
  require(grad_logits.rows() == static_cast<Eigen::Index>(cache.rows.size()) &&
              grad_logits.cols() == state.num_keywords,
          ErrorKind::kShape, "logit gradient does not match the cached batch");
  std::vector<Vector> per_row(cache.rows.size());
  parallel_for(cache.rows.size(), workers, [&](std::size_t i) {
    per_row[i] = example_gradient(state, cache.rows[i],
                                  grad_logits.row(static_cast<Eigen::Index>(i)).transpose());
  });
  return pairwise_sum(per_row);
}

void adam_step(ModelState& state, const Vector& grads, double learning_rate,
               const AdamOptions& opts) {
  require(grads.size() == state.params.size(), ErrorKind::kShape,
          "gradient has " + std::to_string(grads.size()) + " entries, model has " +
              std::to_string(state.params.size()));
  require(grads.allFinite(), ErrorKind::kNumeric, "non-finite gradient passed to Adam");
  const std::uint64_t step = state.adam_step + 1;
  const double c1 = 1.0 - std::pow(opts.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(opts.beta2, static_cast<double>(step));
  for (const auto& b : state.blocks) {
    if (b.frozen) continue;
    for (std::size_t j = 0; j < b.size; ++j) {
      const auto i = static_cast<Eigen::Index>(b.offset + j);
      const double g = grads[i];
      state.adam_m[i] = opts.beta1 * state.adam_m[i] + (1.0 - opts.beta1) * g;
      state.adam_v[i] = opts.beta2 * state.adam_v[i] + (1.0 - opts.beta2) * g * g;
      const double m_hat = state.adam_m[i] / c1;
      const double v_hat = state.adam_v[i] / c2;
      state.params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + opts.epsilon);
    }
  }
  state.adam_step = step;
  state.version = next_version();
}

ModelState average_checkpoints(std::span<const ModelState> checkpoints) {
  require(!checkpoints.empty(), ErrorKind::kInvalidArgument, "no checkpoints to average");
  const ModelState& last = checkpoints.back();
  for (const auto& c : checkpoints) {
    require(c.blocks == last.blocks && c.config == last.config && c.head_kind == last.head_kind &&
                c.num_keywords == last.num_keywords,
            ErrorKind::kShape, "checkpoints have different shape tables");
    require(c.feature_stats == last.feature_stats, ErrorKind::kInvalidArgument,
            "checkpoints carry different feature statistics");
  }
  ModelState out = last;
  // Running mean: exact when every checkpoint is identical.
  out.params = checkpoints.front().params;
  for (std::size_t i = 1; i < checkpoints.size(); ++i) {
    out.params += (checkpoints[i].params - out.params) / static_cast<double>(i + 1);
  }
  out.version = next_version();
  return out;
}

}  // namespace mixkws
