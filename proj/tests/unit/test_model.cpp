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

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "mixkws/checkpoint.hpp"
#include "mixkws/error.hpp"
#include "mixkws/model.hpp"
#include "mixkws/rng.hpp"
#include "mixkws/trainer.hpp"

using namespace mixkws;

namespace {

FeatureMatrix random_input(Rng& rng, int frames, int dim = kNumMelBins) {
  FeatureMatrix f;
  f.frames.resize(frames, dim);
  for (Eigen::Index i = 0; i < f.frames.size(); ++i) f.frames.data()[i] = rng.normal();
  return f;
}

Matrix random_targets(Rng& rng, int rows, int k) {
  Matrix t(rows, k);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform() < 0.4 ? 1.0 : 0.0;
  return t;
}

double batch_loss(const ModelState& s, const std::vector<FeatureMatrix>& x, const Matrix& t) {
  return bce_loss(forward(s, x), t).loss;
}

double block_value(const ModelState& s, const std::string& name, std::size_t i) {
  return s.params[static_cast<Eigen::Index>(s.block(name).offset + i)];
}

}  // namespace

TEST_CASE("block table of the default backbone") {
  const ModelState s = create_model({}, 8, 1);
  CHECK(s.block("conv0.weight").shape == std::vector<int>{16, 1, 3, 3});
  CHECK(s.block("conv2.weight").shape == std::vector<int>{64, 32, 3, 3});
  CHECK(s.block("embed.weight").shape == std::vector<int>{64, 64});
  CHECK(s.block("head.weight").shape == std::vector<int>{8, 64});
  CHECK(s.num_params() == 160 + 4640 + 18496 + 4160 + 520);
  CHECK_NOTHROW(validate_state(s));
  CHECK_THROWS_AS(s.block("nope"), Error);
  for (std::size_t i = 0; i < 16; ++i) CHECK(block_value(s, "conv0.bias", i) == 0.0);
}

TEST_CASE("conv forward on a 2x2 input matches hand computation") {
  BackboneConfig cfg;
  cfg.blocks = {{1, 1}};
  cfg.embedding_dim = 1;
  cfg.input_dim = 2;
  ModelState s = create_model(cfg, 1, 3);
  s.params.setZero();
  const auto& w = s.block("conv0.weight");
  for (std::size_t i = 0; i < w.size; ++i) s.params[static_cast<Eigen::Index>(w.offset + i)] = 1.0;
  s.params[static_cast<Eigen::Index>(s.block("conv0.bias").offset)] = 0.5;
  s.params[static_cast<Eigen::Index>(s.block("embed.weight").offset)] = 2.0;
  s.params[static_cast<Eigen::Index>(s.block("embed.bias").offset)] = -1.0;
  mark_modified(s);

  FeatureMatrix x;
  x.frames.resize(2, 2);
  x.frames << 1.0, 2.0, 3.0, 4.0;
  // Every padded 3x3 window covers all four inputs: 10 + 0.5 at each output,
  // pooled to 10.5, embedded to 2 * 10.5 - 1.
  const Vector e = embed(s, x);
  CHECK(e[0] == doctest::Approx(20.0));

  x.frames << -1.0, -2.0, -3.0, -4.0;
  CHECK(embed(s, x)[0] == doctest::Approx(-1.0));  // ReLU clips the conv output to 0
}

TEST_CASE("stride-2 output sizes") {
  Rng rng(1);
  const ModelState s = create_model({}, 4, 1);
  ExampleCache cache;
  embed(s, random_input(rng, 98), &cache);
  REQUIRE(cache.conv.size() == 3);
  CHECK(cache.conv[0].out_h == 49);
  CHECK(cache.conv[0].out_w == 40);
  CHECK(cache.conv[1].out_h == 25);
  CHECK(cache.conv[2].out_h == 13);
  CHECK(cache.conv[2].out_w == 10);
}

TEST_CASE("BCE loss values and gradient") {
  Matrix z(1, 2), t(1, 2);
  z << 0.0, 2.0;
  t << 1.0, 0.0;
  const LossResult r = bce_loss(z, t);
  const double expected = 0.5 * (std::log(2.0) + std::log(1.0 + std::exp(2.0)));
  CHECK(r.loss == doctest::Approx(expected));
  CHECK(r.grad(0, 0) == doctest::Approx((0.5 - 1.0) / 2.0));
  CHECK(r.grad(0, 1) == doctest::Approx(sigmoid(2.0) / 2.0));

  Matrix big(1, 1), one(1, 1);
  big << 1000.0;
  one << 0.0;
  CHECK(bce_loss(big, one).loss == doctest::Approx(-std::log(kProbabilityClamp)));
  CHECK(std::isfinite(bce_loss(-big, one).loss));
  CHECK_THROWS_AS(bce_loss(z, Matrix(2, 2)), Error);
}

TEST_CASE("BCE is at least the binary entropy of the target") {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    Matrix z(1, 1), t(1, 1);
    z << rng.uniform(-6.0, 6.0);
    t << rng.uniform();
    const double p = sigmoid(z(0, 0));
    const double tt = t(0, 0);
    const double h = -(tt * std::log(tt) + (1 - tt) * std::log(1 - tt));
    const double loss = bce_loss(z, t).loss;
    CHECK(loss >= 0.0);
    CHECK(loss >= h - 1e-12);
    CHECK(loss == doctest::Approx(-(tt * std::log(p) + (1 - tt) * std::log(1 - p))));
  }
}

TEST_CASE("BCE gradient matches finite differences in the logits") {
  Rng rng(3);
  Matrix z(3, 4);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.uniform(-3, 3);
  const Matrix t = random_targets(rng, 3, 4);
  const LossResult r = bce_loss(z, t);
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    Matrix zp = z, zm = z;
    zp.data()[i] += 1e-6;
    zm.data()[i] -= 1e-6;
    const double fd = (bce_loss(zp, t).loss - bce_loss(zm, t).loss) / 2e-6;
    CHECK(r.grad.data()[i] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("backward matches central differences for every block") {
  for (HeadKind head : {HeadKind::kLinear, HeadKind::kTwoLayer}) {
    Rng rng(head == HeadKind::kLinear ? 4 : 5);
    ModelState s = create_model({}, 5, 11);
    if (head == HeadKind::kTwoLayer) {
      s = reinit_head(s, 3, 12);
      s.set_backbone_frozen(false);
    }
    std::vector<FeatureMatrix> x{random_input(rng, 12), random_input(rng, 9)};
    const Matrix t = random_targets(rng, 2, s.num_keywords);
    ForwardCache cache;
    const Matrix logits = forward(s, x, &cache);
    const Vector g = backward(s, cache, bce_loss(logits, t).grad);

    for (const auto& b : s.blocks) {
      for (int probe = 0; probe < 3; ++probe) {
        const auto idx = static_cast<Eigen::Index>(b.offset + rng.index(b.size));
        ModelState p = s, m = s;
        p.params[idx] += 1e-6;
        m.params[idx] -= 1e-6;
        mark_modified(p);
        mark_modified(m);
        const double fd = (batch_loss(p, x, t) - batch_loss(m, x, t)) / 2e-6;
        INFO(b.name, " index ", idx);
        CHECK(g[idx] == doctest::Approx(fd).epsilon(1e-4).scale(1e-6));
      }
    }
  }
}

TEST_CASE("frozen blocks get zero gradient and no update") {
  Rng rng(6);
  const ModelState base = create_model({}, 4, 2);
  ModelState s = reinit_head(base, 3, 7);
  CHECK(s.backbone_frozen());
  std::vector<FeatureMatrix> x{random_input(rng, 10)};
  ForwardCache cache;
  const Matrix logits = forward(s, x, &cache);
  const Vector g = backward(s, cache, bce_loss(logits, random_targets(rng, 1, 3)).grad);
  for (const auto& b : s.blocks) {
    if (!b.backbone) continue;
    CHECK(g.segment(static_cast<Eigen::Index>(b.offset), static_cast<Eigen::Index>(b.size))
              .isZero(0.0));
  }
  const auto before = s.backbone_hash();
  adam_step(s, Vector::Ones(static_cast<Eigen::Index>(s.num_params())), 0.1);
  CHECK(s.backbone_hash() == before);
  CHECK(before == base.backbone_hash());
}

TEST_CASE("backward rejects a stale cache") {
  Rng rng(7);
  ModelState s = create_model({}, 2, 3);
  std::vector<FeatureMatrix> x{random_input(rng, 8)};
  ForwardCache cache;
  const Matrix logits = forward(s, x, &cache);
  const Matrix g = bce_loss(logits, random_targets(rng, 1, 2)).grad;
  adam_step(s, backward(s, cache, g), 1e-3);
  CHECK_THROWS_AS(backward(s, cache, g), Error);
}

TEST_CASE("first Adam step moves each parameter by lr * sign(g)") {
  ModelState s = create_model({}, 2, 1);
  const Vector before = s.params;
  Vector g = Vector::Zero(static_cast<Eigen::Index>(s.num_params()));
  g[0] = 0.5;
  g[1] = -2.0;
  adam_step(s, g, 0.01);
  // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
  CHECK(s.params[0] - before[0] == doctest::Approx(-0.01 * 0.5 / (0.5 + 1e-8)));
  CHECK(s.params[1] - before[1] == doctest::Approx(0.01 * 2.0 / (2.0 + 1e-8)));
  CHECK(s.params[2] == before[2]);
  CHECK(s.adam_step == 1);
  CHECK(s.adam_m[0] == doctest::Approx(0.05));
  CHECK(s.adam_v[1] == doctest::Approx(0.004));

  g[0] = std::nan("");
  CHECK_THROWS_AS(adam_step(s, g, 0.01), Error);
}

TEST_CASE("loss does not increase under small full-batch steps") {
  Rng rng(8);
  ModelState s = create_model({}, 3, 4);
  std::vector<FeatureMatrix> x{random_input(rng, 10), random_input(rng, 10),
                               random_input(rng, 10)};
  const Matrix t = random_targets(rng, 3, 3);
  double prev = batch_loss(s, x, t);
  for (int step = 0; step < 50; ++step) {
    ForwardCache cache;
    const Matrix logits = forward(s, x, &cache);
    const Vector g = backward(s, cache, bce_loss(logits, t).grad);
    s.params -= 1e-3 * g;
    mark_modified(s);
    const double now = batch_loss(s, x, t);
    CHECK(now <= prev + 1e-15);
    prev = now;
  }
}

TEST_CASE("gradients do not depend on the worker count") {
  Rng rng(9);
  const ModelState s = create_model({}, 4, 5);
  std::vector<FeatureMatrix> x;
  for (int i = 0; i < 7; ++i) x.push_back(random_input(rng, 11));
  const Matrix t = random_targets(rng, 7, 4);
  Vector ref;
  for (int workers : {1, 2, 5}) {
    ForwardCache cache;
    const Matrix logits = forward(s, x, &cache, workers);
    const Vector g = backward(s, cache, bce_loss(logits, t).grad, workers);
    if (workers == 1) {
      ref = g;
    } else {
      CHECK(g == ref);
    }
  }
}

TEST_CASE("reinit_head keeps the backbone and sizes the new head") {
  const ModelState s = create_model({}, 8, 1);
  for (int k : {4, 10, 35}) {
    const ModelState r = reinit_head(s, k, 2);
    CHECK(r.head_kind == HeadKind::kTwoLayer);
    CHECK(r.block("head2.weight").shape == std::vector<int>{k, 64});
    CHECK(r.block("head1.weight").shape == std::vector<int>{64, 64});
    CHECK(r.backbone_hash() == s.backbone_hash());
    Rng rng(3);
    CHECK(head_logits(r, embed(r, random_input(rng, 20))).size() == k);
  }
  CHECK(reinit_head(s, 4, 9).params == reinit_head(s, 4, 9).params);
  CHECK_FALSE(reinit_head(s, 4, 9).params == reinit_head(s, 4, 10).params);
  CHECK_THROWS_AS(reinit_head(s, 0, 1), Error);
}

TEST_CASE("checkpoint averaging") {
  ModelState a = create_model({}, 2, 1);
  std::vector<ModelState> same(5, a);
  CHECK(average_checkpoints(same).params == a.params);

  BackboneConfig tiny;
  tiny.blocks = {{1, 1}};
  tiny.embedding_dim = 1;
  tiny.input_dim = 2;
  ModelState p = create_model(tiny, 1, 1), q = p;
  p.params.setConstant(1.0);
  q.params.setConstant(3.0);
  const std::vector<ModelState> pq{p, q};
  CHECK(average_checkpoints(pq).params == Vector::Constant(p.params.size(), 2.0));

  Rng rng(4);
  std::vector<ModelState> many;
  for (int i = 0; i < 10; ++i) {
    ModelState m = a;
    for (Eigen::Index j = 0; j < m.params.size(); ++j) m.params[j] = rng.normal();
    many.push_back(m);
  }
  const ModelState avg = average_checkpoints(many);
  for (Eigen::Index j = 0; j < a.params.size(); j += 97) {
    double sum = 0.0;
    for (const auto& m : many) sum += m.params[j];
    CHECK(std::abs(avg.params[j] - sum / 10.0) <= 1e-12);
  }

  ModelState other = create_model({}, 3, 1);
  const std::vector<ModelState> mismatch{a, other};
  CHECK_THROWS_AS(average_checkpoints(mismatch), Error);
  ModelState stats = a;
  stats.feature_stats.mean.assign(80, 1.0);
  stats.feature_stats.stddev.assign(80, 1.0);
  const std::vector<ModelState> stat_mismatch{a, stats};
  CHECK_THROWS_AS(average_checkpoints(stat_mismatch), Error);
}

TEST_CASE("pairwise_sum adds in a fixed order") {
  std::vector<Vector> parts;
  for (int i = 1; i <= 5; ++i) parts.push_back(Vector::Constant(2, i));
  CHECK(pairwise_sum(parts) == Vector::Constant(2, 15.0));
}

TEST_CASE("checkpoints round trip bit-exactly") {
  Rng rng(5);
  ModelState s = reinit_head(create_model({}, 6, 2), 4, 3);
  s.feature_stats.mean.assign(80, 0.25);
  s.feature_stats.stddev.assign(80, 1.5);
  for (Eigen::Index j = 0; j < s.adam_m.size(); ++j) s.adam_m[j] = rng.normal();
  s.adam_step = 17;
  const auto bytes = encode_checkpoint(s, "{\"seed\":1}");
  const Checkpoint c = decode_checkpoint(bytes);
  CHECK(c.config_echo == "{\"seed\":1}");
  CHECK(c.state.params == s.params);
  CHECK(c.state.adam_m == s.adam_m);
  CHECK(c.state.adam_v == s.adam_v);
  CHECK(c.state.adam_step == 17);
  CHECK(c.state.blocks == s.blocks);
  CHECK(c.state.feature_stats == s.feature_stats);
  CHECK(c.state.head_kind == HeadKind::kTwoLayer);
  CHECK(c.state.config == s.config);
  CHECK(encode_checkpoint(c.state, c.config_echo) == bytes);

  const auto path = std::filesystem::temp_directory_path() / "mixkws_model_test.ckpt";
  save_checkpoint(path.string(), s, "x");
  CHECK(load_checkpoint(path.string()).state.params == s.params);
  std::filesystem::remove(path);
}

TEST_CASE("corrupted checkpoints are rejected") {
  const auto bytes = encode_checkpoint(create_model({}, 2, 1));
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x01;
  CHECK_THROWS_AS(decode_checkpoint(flipped), Error);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 9);
  CHECK_THROWS_AS(decode_checkpoint(truncated), Error);
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(magic), Error);
}

TEST_CASE("training with zero epochs returns the input") {
  const ModelState s = create_model({}, 2, 1);
  std::vector<LabeledExample> pool;
  const TrainResult r = train(s, pool, {}, [] {
    TrainOptions o;
    o.epochs = 0;
    return o;
  }());
  CHECK(r.model.params == s.params);
  CHECK(r.log.empty());
}
