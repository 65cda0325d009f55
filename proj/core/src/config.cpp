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

#include "mixkws/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mixkws/error.hpp"

namespace mixkws {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Typed access to one JSON object; remembers its key path for messages and
// rejects keys outside `allowed`.
class Section {
 public:
  Section(const json* obj, std::string path, std::set<std::string> allowed)
      : obj_(obj), path_(std::move(path)) {
    if (obj_ == nullptr) return;
    require(obj_->is_object(), ErrorKind::kConfig, where() + " must be an object");
    for (const auto& [key, value] : obj_->items()) {
      require(allowed.contains(key), ErrorKind::kConfig, "unknown key " + where(key));
    }
  }

  std::string where(const std::string& key = {}) const {
    const std::string p = key.empty() ? path_ : (path_.empty() ? key : path_ + "." + key);
    return "'" + (p.empty() ? std::string("<root>") : p) + "'";
  }

  const json* find(const std::string& key) const {
    if (obj_ == nullptr) return nullptr;
    const auto it = obj_->find(key);
    return it == obj_->end() ? nullptr : &*it;
  }

  Section child(const std::string& key, std::set<std::string> allowed) const {
    return Section(find(key), path_.empty() ? key : path_ + "." + key, std::move(allowed));
  }

  template <typename T>
  void get(const std::string& key, T& out) const {
    const json* v = find(key);
    if (v == nullptr) return;
    try {
      if constexpr (std::is_floating_point_v<T>) {
        require(v->is_number(), ErrorKind::kConfig, where(key) + " must be a number");
      } else if constexpr (std::is_integral_v<T>) {
        require(v->is_number_integer(), ErrorKind::kConfig, where(key) + " must be an integer");
        if constexpr (std::is_unsigned_v<T>) {
          require(v->is_number_unsigned(), ErrorKind::kConfig,
                  where(key) + " must be non-negative");
        }
      }
      out = v->get<T>();
    } catch (const json::exception& e) {
      fail(ErrorKind::kConfig, where(key) + ": " + e.what());
    }
  }

  void check(bool ok, const std::string& key, const std::string& what) const {
    require(ok, ErrorKind::kConfig, where(key) + " " + what);
  }

 private:
  const json* obj_;
  std::string path_;
};

std::vector<StrategyKind> read_strategies(const Section& s, const std::string& key,
                                          std::vector<StrategyKind> fallback) {
  std::vector<std::string> names;
  s.get(key, names);
  if (names.empty() && s.find(key) == nullptr) return fallback;
  std::vector<StrategyKind> out;
  for (const auto& n : names) {
    try {
      out.push_back(parse_strategy(n));
    } catch (const Error& e) {
      fail(ErrorKind::kConfig, s.where(key) + ": " + e.what());
    }
  }
  return out;
}

void read_train(const Section& s, TrainOptions& t) {
  s.get("epochs", t.epochs);
  s.get("learning_rate", t.learning_rate);
  s.get("batch_size", t.batch_size);
  s.get("average_last", t.average_last);
  s.check(t.epochs >= 0, "epochs", "must be non-negative");
  s.check(t.learning_rate > 0.0, "learning_rate", "must be positive");
  s.check(t.batch_size > 0, "batch_size", "must be positive");
  s.check(t.average_last > 0, "average_last", "must be positive");
}

const std::set<std::string> kTrainKeys = {"epochs", "learning_rate", "batch_size", "average_last"};

ordered_json train_json(const TrainOptions& t) {
  ordered_json j;
  j["epochs"] = t.epochs;
  j["learning_rate"] = t.learning_rate;
  j["batch_size"] = t.batch_size;
  j["average_last"] = t.average_last;
  return j;
}

}  // namespace

Config default_config() {
  Config c;
  c.finetune.learning_rate = 3e-3;
  return c;
}

Config parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text, nullptr, true, true);
  } catch (const json::exception& e) {
    fail(ErrorKind::kConfig, std::string("config is not valid JSON: ") + e.what());
  }
  Config c = default_config();
  const Section top(&root, "",
                    {"sample_rate", "features", "backbone", "strategy", "pretrain", "finetune",
                     "synth", "dataset", "plan"});
  top.get("sample_rate", c.sample_rate_hz);
  top.check(c.sample_rate_hz > 0, "sample_rate", "must be positive");

  const Section f = top.child("features", {"frame_length_ms", "frame_shift_ms", "fft_size",
                                           "low_hz", "high_hz", "log_floor"});
  auto& fb = c.features;
  fb.sample_rate_hz = c.sample_rate_hz;
  f.get("frame_length_ms", fb.frame_length_ms);
  f.get("frame_shift_ms", fb.frame_shift_ms);
  f.get("fft_size", fb.fft_size);
  f.get("low_hz", fb.low_hz);
  f.get("high_hz", fb.high_hz);
  f.get("log_floor", fb.log_floor);
  f.check(fb.frame_length_ms > 0.0 && fb.window_samples() > 0, "frame_length_ms",
          "must give at least one sample");
  f.check(fb.frame_shift_ms > 0.0 && fb.hop_samples() > 0, "frame_shift_ms",
          "must give at least one sample");
  f.check(fb.fft_size >= fb.window_samples(), "fft_size", "must cover the frame length");
  f.check(fb.low_hz >= 0.0 && fb.low_hz < fb.high_hz, "low_hz", "must lie below high_hz");
  f.check(fb.high_hz <= 0.5 * c.sample_rate_hz, "high_hz", "must not exceed the Nyquist rate");
  f.check(fb.log_floor > 0.0, "log_floor", "must be positive");

  const Section b = top.child("backbone", {"channels", "strides", "embedding_dim"});
  std::vector<int> channels, strides;
  for (const auto& blk : c.backbone.blocks) {
    channels.push_back(blk.out_channels);
    strides.push_back(blk.stride);
  }
  b.get("channels", channels);
  b.get("strides", strides);
  b.get("embedding_dim", c.backbone.embedding_dim);
  b.check(channels.size() == strides.size(), "strides", "must have one entry per channel count");
  c.backbone.blocks.clear();
  for (std::size_t i = 0; i < channels.size(); ++i) {
    c.backbone.blocks.push_back({channels[i], strides[i]});
  }
  try {
    validate_backbone_config(c.backbone);
  } catch (const Error& e) {
    fail(ErrorKind::kConfig, b.where() + ": " + e.what());
  }

  const Section s = top.child("strategy", {"clean_fraction", "mixup_alpha"});
  s.get("clean_fraction", c.strategy.clean_fraction);
  s.get("mixup_alpha", c.strategy.mixup_alpha);
  s.check(c.strategy.clean_fraction >= 0.0 && c.strategy.clean_fraction <= 1.0, "clean_fraction",
          "must lie in [0, 1]");
  s.check(c.strategy.mixup_alpha > 0.0, "mixup_alpha", "must be positive");

  read_train(top.child("pretrain", kTrainKeys), c.pretrain);
  read_train(top.child("finetune", kTrainKeys), c.finetune);
  c.pretrain.fbank = c.features;
  c.finetune.fbank = c.features;

  const Section y = top.child(
      "synth", {"pretrain_keywords", "pretrain_train", "pretrain_valid", "pretrain_test",
                "finetune_keywords", "finetune_pool", "finetune_test", "pretrain_mixed_trials",
                "finetune_mixed_trials", "duration_s", "snr_db", "base_hz", "hz_per_keyword",
                "freq_jitter", "amp_jitter", "onset_jitter", "split_seeds"});
  auto& sc = c.synth;
  sc.sample_rate_hz = c.sample_rate_hz;
  y.get("pretrain_keywords", sc.pretrain_keywords);
  y.get("pretrain_train", sc.pretrain_train);
  y.get("pretrain_valid", sc.pretrain_valid);
  y.get("pretrain_test", sc.pretrain_test);
  y.get("finetune_keywords", sc.finetune_keywords);
  y.get("finetune_pool", sc.finetune_pool);
  y.get("finetune_test", sc.finetune_test);
  y.get("pretrain_mixed_trials", sc.pretrain_mixed_trials);
  y.get("finetune_mixed_trials", sc.finetune_mixed_trials);
  y.get("duration_s", sc.duration_s);
  y.get("snr_db", sc.params.snr_db);
  y.get("base_hz", sc.params.base_hz);
  y.get("hz_per_keyword", sc.params.hz_per_keyword);
  y.get("freq_jitter", sc.params.freq_jitter);
  y.get("amp_jitter", sc.params.amp_jitter);
  y.get("onset_jitter", sc.params.onset_jitter);
  {
    const Section seeds = y.child("split_seeds", std::set<std::string>(corpus_split_names().begin(),
                                                                       corpus_split_names().end()));
    for (const auto& name : corpus_split_names()) {
      if (seeds.find(name) == nullptr) continue;
      std::uint64_t v = 0;
      seeds.get(name, v);
      sc.split_seeds[name] = v;
    }
  }
  y.check(sc.pretrain_keywords >= 3, "pretrain_keywords", "must be at least 3");
  y.check(sc.finetune_keywords >= 3, "finetune_keywords", "must be at least 3");
  y.check(sc.pretrain_train > 0 && sc.pretrain_test > 0 && sc.pretrain_valid >= 0,
          "pretrain_train", "and pretrain_test must be positive");
  y.check(sc.finetune_pool > 0 && sc.finetune_test > 0, "finetune_pool",
          "and finetune_test must be positive");
  y.check(sc.pretrain_mixed_trials > 0 && sc.finetune_mixed_trials > 0, "pretrain_mixed_trials",
          "and finetune_mixed_trials must be positive");
  y.check(sc.duration_s > 0.0, "duration_s", "must be positive");
  y.check(sc.params.base_hz > 0.0 && sc.params.hz_per_keyword >= 0.0, "base_hz",
          "must be positive");
  y.check(sc.params.freq_jitter >= 0.0 && sc.params.freq_jitter < 1.0, "freq_jitter",
          "must lie in [0, 1)");
  y.check(sc.params.amp_jitter >= 0.0 && sc.params.amp_jitter < 1.0, "amp_jitter",
          "must lie in [0, 1)");
  y.check(sc.params.onset_jitter >= 0.0 && sc.params.onset_jitter < 0.2, "onset_jitter",
          "must lie in [0, 0.2)");

  const Section d = top.child("dataset", {"min_letters", "min_count", "cap", "excerpt_s",
                                          "valid_per_keyword", "test_per_keyword",
                                          "mixed_trials"});
  auto& dc = c.dataset;
  d.get("min_letters", dc.selection.min_letters);
  d.get("min_count", dc.selection.min_count);
  d.get("cap", dc.selection.cap);
  d.get("excerpt_s", dc.excerpt_s);
  d.get("valid_per_keyword", dc.valid_per_keyword);
  d.get("test_per_keyword", dc.test_per_keyword);
  d.get("mixed_trials", dc.mixed_trials);
  d.check(dc.selection.min_letters >= 1, "min_letters", "must be positive");
  d.check(dc.selection.min_count >= 0, "min_count", "must be non-negative");
  d.check(dc.selection.cap > dc.valid_per_keyword + dc.test_per_keyword, "cap",
          "must exceed the valid and test examples per keyword");
  d.check(dc.excerpt_s > 0.0, "excerpt_s", "must be positive");
  d.check(dc.valid_per_keyword >= 0 && dc.test_per_keyword >= 1, "test_per_keyword",
          "must be positive");
  d.check(dc.mixed_trials > 0, "mixed_trials", "must be positive");

  const Section p =
      top.child("plan", {"pretrain_strategies", "finetune_strategies", "shots", "repeats"});
  c.plan.pretrain_strategies = read_strategies(p, "pretrain_strategies", c.plan.pretrain_strategies);
  c.plan.finetune_strategies = read_strategies(p, "finetune_strategies", c.plan.finetune_strategies);
  p.get("shots", c.plan.shots);
  p.get("repeats", c.plan.repeats);
  try {
    validate_plan(make_plan(c, 0));
  } catch (const Error& e) {
    fail(ErrorKind::kConfig, p.where() + ": " + e.what());
  }
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::kIo, "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const Error& e) {
    fail(e.kind(), path + ": " + e.what());
  }
}

std::string config_to_json(const Config& c) {
  ordered_json j;
  j["sample_rate"] = c.sample_rate_hz;
  const auto& fb = c.features;
  j["features"] = {{"frame_length_ms", fb.frame_length_ms}, {"frame_shift_ms", fb.frame_shift_ms},
                   {"fft_size", fb.fft_size},               {"low_hz", fb.low_hz},
                   {"high_hz", fb.high_hz},                 {"log_floor", fb.log_floor}};
  std::vector<int> channels, strides;
  for (const auto& blk : c.backbone.blocks) {
    channels.push_back(blk.out_channels);
    strides.push_back(blk.stride);
  }
  j["backbone"] = {{"channels", channels},
                   {"strides", strides},
                   {"embedding_dim", c.backbone.embedding_dim}};
  j["strategy"] = {{"clean_fraction", c.strategy.clean_fraction},
                   {"mixup_alpha", c.strategy.mixup_alpha}};
  j["pretrain"] = train_json(c.pretrain);
  j["finetune"] = train_json(c.finetune);
  const auto& sc = c.synth;
  ordered_json y;
  y["pretrain_keywords"] = sc.pretrain_keywords;
  y["pretrain_train"] = sc.pretrain_train;
  y["pretrain_valid"] = sc.pretrain_valid;
  y["pretrain_test"] = sc.pretrain_test;
  y["finetune_keywords"] = sc.finetune_keywords;
  y["finetune_pool"] = sc.finetune_pool;
  y["finetune_test"] = sc.finetune_test;
  y["pretrain_mixed_trials"] = sc.pretrain_mixed_trials;
  y["finetune_mixed_trials"] = sc.finetune_mixed_trials;
  y["duration_s"] = sc.duration_s;
  y["snr_db"] = sc.params.snr_db;
  y["base_hz"] = sc.params.base_hz;
  y["hz_per_keyword"] = sc.params.hz_per_keyword;
  y["freq_jitter"] = sc.params.freq_jitter;
  y["amp_jitter"] = sc.params.amp_jitter;
  y["onset_jitter"] = sc.params.onset_jitter;
  ordered_json seeds = ordered_json::object();
  for (const auto& name : corpus_split_names()) {
    const auto it = sc.split_seeds.find(name);
    if (it != sc.split_seeds.end()) seeds[name] = it->second;
  }
  y["split_seeds"] = seeds;
  j["synth"] = y;
  const auto& dc = c.dataset;
  j["dataset"] = {{"min_letters", dc.selection.min_letters},
                  {"min_count", dc.selection.min_count},
                  {"cap", dc.selection.cap},
                  {"excerpt_s", dc.excerpt_s},
                  {"valid_per_keyword", dc.valid_per_keyword},
                  {"test_per_keyword", dc.test_per_keyword},
                  {"mixed_trials", dc.mixed_trials}};
  std::vector<std::string> pre, fine;
  for (auto k : c.plan.pretrain_strategies) pre.emplace_back(strategy_name(k));
  for (auto k : c.plan.finetune_strategies) fine.emplace_back(strategy_name(k));
  j["plan"] = {{"pretrain_strategies", pre},
               {"finetune_strategies", fine},
               {"shots", c.plan.shots},
               {"repeats", c.plan.repeats}};
  return j.dump(2);
}

ExperimentPlan make_plan(const Config& c, std::uint64_t seed) {
  ExperimentPlan p = c.plan;
  p.master_seed = seed;
  p.strategy = c.strategy;
  p.backbone = c.backbone;
  p.pretrain = c.pretrain;
  p.finetune = c.finetune;
  p.pretrain.fbank = c.features;
  p.finetune.fbank = c.features;
  return p;
}

}  // namespace mixkws
