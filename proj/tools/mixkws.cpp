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

// mixkws: synthetic corpus generation, dataset building, pre-training,
// fine-tuning, evaluation and full experiment grids.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mixkws/checkpoint.hpp"
#include "mixkws/config.hpp"
#include "mixkws/corpus.hpp"
#include "mixkws/data.hpp"
#include "mixkws/error.hpp"
#include "mixkws/eval.hpp"
#include "mixkws/fewshot.hpp"
#include "mixkws/hash.hpp"
#include "mixkws/rng.hpp"
#include "mixkws/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace mixkws;

namespace {

struct Options {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
  int workers = 1;
  std::string data;
  std::string checkpoint;
  std::string strategy;
  std::vector<int> shots;
  int subset = 0;
  std::string test = "clean";
  std::string log;
  std::string alignments;
  std::string audio_dir;
  std::string part = "pretrain";
};

void log_line(const std::string& msg) { std::cerr << "mixkws: " << msg << '\n'; }

Config load(const Options& o) {
  return o.config_path.empty() ? default_config() : load_config(o.config_path);
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::kIo, "cannot write " + path.string());
  return out;
}

// Provenance record shared by every subcommand.
class Provenance {
 public:
  Provenance(std::string command, const Options& o, const Config& c)
      : command_(std::move(command)), seed_(o.seed), config_(config_to_json(c)) {
    if (!o.config_path.empty()) add_input("config", o.config_path);
  }

  void add_input(const std::string& role, const fs::path& path) {
    inputs_[role + ":" + path.filename().string()] = hex64(hash_file(path.string()));
  }

  void add_data_dir(const fs::path& dir) {
    for (const char* part : {"pretrain", "finetune"}) {
      for (const char* file : {"keywords.tsv", "manifest.jsonl", "mixed_test.jsonl"}) {
        const fs::path p = dir / part / file;
        if (fs::exists(p)) {
          inputs_[std::string("data:") + part + "/" + file] = hex64(hash_file(p.string()));
        }
      }
    }
  }

  void set(const std::string& key, ordered_json value) { extra_[key] = std::move(value); }

  std::string echo() const {
    ordered_json j;
    j["command"] = command_;
    j["seed"] = seed_;
    for (const auto& [k, v] : extra_.items()) j[k] = v;
    j["config"] = ordered_json::parse(config_);
    return j.dump();
  }

  void write(const fs::path& out_dir) const {
    ordered_json j;
    j["command"] = command_;
    j["seed"] = seed_;
    for (const auto& [k, v] : extra_.items()) j[k] = v;
    j["inputs"] = ordered_json::object();
    for (const auto& [k, v] : inputs_) j["inputs"][k] = v;
    j["config"] = ordered_json::parse(config_);
    open_out(out_dir / "provenance.json") << j.dump(2) << '\n';
  }

 private:
  std::string command_;
  std::uint64_t seed_;
  std::string config_;
  std::map<std::string, std::string> inputs_;
  ordered_json extra_ = ordered_json::object();
};

ordered_json report_json(const MetricReport& m) {
  return {{"eer", m.eer}, {"topk_acc", m.topk_acc}, {"k", m.k}, {"n_trials", m.n_trials}};
}

void write_train_log(const fs::path& path, const std::vector<EpochLog>& log) {
  auto out = open_out(path);
  for (const auto& e : log) {
    ordered_json j;
    j["epoch"] = e.epoch;
    j["mean_loss"] = e.mean_loss;
    j["mixed_examples"] = e.mixed_examples;
    out << j.dump() << '\n';
  }
}

// Strategy a checkpoint was pre-trained with, read from its config echo.
StrategyKind pretrain_strategy_of(const Checkpoint& ckpt) {
  try {
    const auto j = nlohmann::json::parse(ckpt.config_echo);
    if (j.contains("pretrain_strategy")) {
      return parse_strategy(j.at("pretrain_strategy").get<std::string>());
    }
    return parse_strategy(j.at("strategy").get<std::string>());
  } catch (const nlohmann::json::exception&) {
    fail(ErrorKind::kFormat, "checkpoint does not record its pre-training strategy");
  }
}

int cmd_gen_synth(const Options& o) {
  const Config c = load(o);
  const fs::path out(o.out);
  log_line("generating synthetic corpus");
  const Corpus corpus = generate_synthetic_corpus(c.synth, o.seed, o.workers);
  write_corpus(corpus, out.string());
  Provenance prov("gen-synth", o, c);
  prov.set("counts", {{"pretrain_entries", corpus.pretrain.entries.size()},
                      {"pretrain_mixed_trials", corpus.pretrain.mixed_test.size()},
                      {"finetune_entries", corpus.finetune.entries.size()},
                      {"finetune_mixed_trials", corpus.finetune.mixed_test.size()}});
  prov.write(out);
  std::cout << "wrote " << corpus.audio.size() << " audio files to " << out.string() << '\n';
  return 0;
}

int cmd_build_dataset(const Options& o) {
  const Config c = load(o);
  const fs::path out = fs::path(o.out) / o.part;
  std::vector<AlignmentRecord> alignments;
  {
    std::ifstream in(o.alignments, std::ios::binary);
    require(in.good(), ErrorKind::kIo, "cannot read " + o.alignments);
    try {
      alignments = read_alignments(in);
    } catch (const Error& e) {
      fail(e.kind(), o.alignments + ": " + e.what());
    }
  }
  const KeywordSelection sel = select_keywords(alignments, c.dataset.selection, o.seed);
  log_line("selected " + std::to_string(sel.keywords.size()) + " keywords, " +
           std::to_string(sel.records.size()) + " occurrences");

  std::vector<ExampleManifestEntry> sources;
  std::set<std::string> seen;
  for (const auto& r : sel.records) {
    if (seen.insert(r.audio_path).second) sources.push_back({r.audio_path, 0, "", Split::kTrain});
  }
  const AudioStore utterances = AudioStore::load(o.audio_dir, sources, c.sample_rate_hz);

  std::map<int, std::vector<const AlignmentRecord*>> by_keyword;
  for (const auto& r : sel.records) by_keyword[sel.keywords.id(r.word)].push_back(&r);

  std::vector<ExampleManifestEntry> entries;
  for (auto& [id, recs] : by_keyword) {
    // Split assignment: a seeded shuffle, then valid, test, and the rest train.
    std::vector<std::size_t> order(recs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(o.seed, {static_cast<std::uint64_t>(id), fnv1a64("split")}));
    std::shuffle(order.begin(), order.end(), rng.engine());
    const auto nv = static_cast<std::size_t>(c.dataset.valid_per_keyword);
    const auto nt = static_cast<std::size_t>(c.dataset.test_per_keyword);
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const auto pos = static_cast<std::size_t>(
          std::find(order.begin(), order.end(), i) - order.begin());
      const Split split = pos < nv ? Split::kValid : pos < nv + nt ? Split::kTest : Split::kTrain;
      const AlignmentRecord& r = *recs[i];
      char name[64];
      std::snprintf(name, sizeof name, "/k%05d_%04zu.wav", id, i);
      const std::string rel = o.part + "/audio/" + std::string(split_name(split)) + name;
      const Waveform clip = excerpt_keyword(r, *utterances.get(r.audio_path), c.dataset.excerpt_s);
      const fs::path path = fs::path(o.out) / rel;
      fs::create_directories(path.parent_path());
      save_wav(path.string(), clip);
      entries.push_back({rel, id, sel.keywords.text(id), split});
    }
  }

  std::vector<ExampleManifestEntry> test;
  for (const auto& e : entries) {
    if (e.split == Split::kTest) test.push_back(e);
  }
  std::vector<MixedTrial> mixed;
  if (sel.keywords.size() >= 2) {
    mixed = build_2mix_trials(test, c.dataset.mixed_trials,
                              derive_seed(o.seed, {fnv1a64("dataset/mixed")}));
  }
  {
    auto f = open_out(out / "keywords.tsv");
    write_keyword_table(f, sel.keywords);
  }
  {
    auto f = open_out(out / "manifest.jsonl");
    write_manifest(f, entries);
  }
  {
    auto f = open_out(out / "mixed_test.jsonl");
    write_mixed_trials(f, mixed);
  }
  Provenance prov("build-dataset", o, c);
  prov.add_input("alignments", o.alignments);
  prov.set("part", o.part);
  prov.set("counts", {{"keywords", sel.keywords.size()},
                      {"entries", entries.size()},
                      {"mixed_trials", mixed.size()}});
  prov.write(out);
  std::cout << "wrote " << entries.size() << " excerpts of " << sel.keywords.size()
            << " keywords to " << out.string() << '\n';
  return 0;
}

int cmd_pretrain(const Options& o) {
  const Config c = load(o);
  const StrategyKind kind = parse_strategy(o.strategy);
  const Corpus corpus = load_corpus(o.data, c.sample_rate_hz);
  const ExperimentPlan plan = make_plan(c, o.seed);
  log_line("pre-training with strategy " + o.strategy);
  const TrainResult result = pretrain_model(plan, corpus, kind, o.workers);

  const fs::path out(o.out);
  Provenance prov("pretrain", o, c);
  prov.add_data_dir(o.data);
  prov.set("strategy", o.strategy);
  save_checkpoint((out / "model.ckpt").string(), result.model, prov.echo());
  write_train_log(out / "train_log.jsonl", result.log);
  prov.set("backbone_hash", hex64(result.model.backbone_hash()));
  prov.write(out);
  std::cout << "backbone " << hex64(result.model.backbone_hash()) << '\n';
  return 0;
}

int cmd_finetune(const Options& o) {
  const Config c = load(o);
  const StrategyKind kind = parse_strategy(o.strategy);
  require(o.shots.size() == 1, ErrorKind::kInvalidArgument, "finetune takes exactly one --shots");
  const Checkpoint base = load_checkpoint(o.checkpoint);
  const StrategyKind pre_kind = pretrain_strategy_of(base);
  const Corpus corpus = load_corpus(o.data, c.sample_rate_hz);
  ExperimentPlan plan = make_plan(c, o.seed);
  log_line("fine-tuning with strategy " + o.strategy + ", " + std::to_string(o.shots[0]) +
           "-shot subset " + std::to_string(o.subset));
  const TrainResult result = finetune_model(plan, corpus, base.state, pre_kind, kind, o.shots[0],
                                            o.subset, o.workers);
  require(result.model.backbone_hash() == base.state.backbone_hash(), ErrorKind::kNumeric,
          "backbone changed during fine-tuning");

  const fs::path out(o.out);
  Provenance prov("finetune", o, c);
  prov.add_input("checkpoint", o.checkpoint);
  prov.add_data_dir(o.data);
  prov.set("pretrain_strategy", std::string(strategy_name(pre_kind)));
  prov.set("strategy", o.strategy);
  prov.set("shots", o.shots[0]);
  prov.set("subset", o.subset);
  save_checkpoint((out / "model.ckpt").string(), result.model, prov.echo());
  write_train_log(out / "train_log.jsonl", result.log);
  prov.set("backbone_hash", hex64(result.model.backbone_hash()));
  prov.write(out);
  std::cout << "backbone " << hex64(result.model.backbone_hash()) << " (unchanged)\n";
  return 0;
}

int cmd_evaluate(const Options& o) {
  const Config c = load(o);
  if (!o.log.empty()) {
    std::ifstream in(o.log, std::ios::binary);
    require(in.good(), ErrorKind::kIo, "cannot read " + o.log);
    const DetectionLog log = read_detection_log(in);
    ordered_json j;
    j["eer"] = compute_eer(log);
    j["n_entries"] = log.size();
    std::cout << j.dump() << '\n';
    return 0;
  }
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const Corpus corpus = load_corpus(o.data, c.sample_rate_hz);
  const bool fine = ckpt.state.head_kind == HeadKind::kTwoLayer;
  const CorpusPart& part = fine ? corpus.finetune : corpus.pretrain;
  const TestKind test = parse_test(o.test);
  const TestSet set = test == TestKind::kClean
                          ? clean_testset(part.split(Split::kTest), corpus.audio,
                                          part.keywords.size())
                          : mixed_testset(part.mixed_test, corpus.audio, part.keywords.size());
  const ScoredTestSet scored = score_testset(ckpt.state, set, c.features, o.workers);
  const MetricReport report = evaluate(scored);

  ordered_json j = report_json(report);
  j["test"] = o.test;
  std::cout << j.dump() << '\n';
  if (!o.out.empty()) {
    const fs::path out(o.out);
    {
      auto f = open_out(out / "detections.jsonl");
      write_detection_log(f, scored.log);
    }
    open_out(out / "metrics.json") << j.dump(2) << '\n';
    Provenance prov("evaluate", o, c);
    prov.add_input("checkpoint", o.checkpoint);
    prov.add_data_dir(o.data);
    prov.set("test", o.test);
    prov.write(out);
  }
  return 0;
}

int cmd_run_plan(const Options& o) {
  Config c = load(o);
  if (!o.shots.empty()) c.plan.shots = o.shots;
  if (!o.strategy.empty()) c.plan.finetune_strategies = {parse_strategy(o.strategy)};
  const ExperimentPlan plan = make_plan(c, o.seed);
  validate_plan(plan);

  Corpus corpus;
  if (o.data.empty()) {
    log_line("generating synthetic corpus in memory");
    corpus = generate_synthetic_corpus(c.synth, o.seed, o.workers);
  } else {
    corpus = load_corpus(o.data, c.sample_rate_hz);
  }
  const ResultGrid grid = run_plan(plan, corpus, o.workers, log_line);

  std::ostringstream table;
  write_grid_table(table, grid);
  std::cout << table.str();

  const fs::path out(o.out);
  {
    auto f = open_out(out / "grid.json");
    write_grid_json(f, grid);
  }
  open_out(out / "grid.txt") << table.str();

  std::vector<OrderingRule> rules;
  const auto& pre = plan.pretrain_strategies;
  const auto has_all = [](const std::vector<StrategyKind>& v) { return v.size() == 3; };
  if (has_all(pre)) rules.push_back(pretrain_mixed_eer_rule(0.02));
  if (has_all(plan.finetune_strategies) &&
      std::find(pre.begin(), pre.end(), StrategyKind::kMixTraining) != pre.end()) {
    for (int s : plan.shots) {
      rules.push_back(finetune_mixed_eer_rule(StrategyKind::kMixTraining, s, 0.02));
    }
  }
  if (!rules.empty()) {
    auto f = open_out(out / "orderings.txt");
    for (const auto& check : check_orderings(grid, rules)) {
      const std::string line =
          std::string(check.pass ? "PASS " : "FAIL ") + check.name + ": " + check.detail;
      f << line << '\n';
      std::cout << line << '\n';
    }
  }

  Provenance prov("run-plan", o, c);
  if (!o.data.empty()) prov.add_data_dir(o.data);
  prov.write(out);
  return 0;
}

std::string one_line(std::string s) {
  for (auto& ch : s) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mix-training keyword spotting toolkit"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool needs_out) {
    sub->add_option("--config", o.config_path, "JSON config (defaults apply when omitted)")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Master seed");
    auto* out = sub->add_option("--out", o.out, "Output directory");
    if (needs_out) out->required();
    sub->add_option("--workers", o.workers, "Worker threads (results do not depend on it)")
        ->check(CLI::PositiveNumber);
  };

  auto* gen = app.add_subcommand("gen-synth", "Generate the synthetic corpus");
  common(gen, true);

  auto* build = app.add_subcommand("build-dataset", "Excerpt keywords from aligned speech");
  common(build, true);
  build->add_option("--alignments", o.alignments, "Alignment TSV")->required();
  build->add_option("--audio-dir", o.audio_dir, "Root of the utterance audio")->required();
  build->add_option("--part", o.part, "Corpus part to write: pretrain | finetune")
      ->check(CLI::IsMember({"pretrain", "finetune"}));

  auto* pre = app.add_subcommand("pretrain", "Pre-train a backbone with a linear head");
  common(pre, true);
  pre->add_option("--data", o.data, "Corpus directory")->required();
  pre->add_option("--strategy", o.strategy, "clean | mixup | mt")->required();

  auto* fine = app.add_subcommand("finetune", "Fine-tune a new head on an N-shot subset");
  common(fine, true);
  fine->add_option("--data", o.data, "Corpus directory")->required();
  fine->add_option("--checkpoint", o.checkpoint, "Pre-trained checkpoint")->required();
  fine->add_option("--strategy", o.strategy, "clean | mixup | mt")->required();
  fine->add_option("--shots", o.shots, "Examples per keyword")->required();
  fine->add_option("--subset", o.subset, "Subset index in [0, repeats)");

  auto* ev = app.add_subcommand("evaluate", "Score a checkpoint or a detection log");
  common(ev, false);
  ev->add_option("--data", o.data, "Corpus directory");
  ev->add_option("--checkpoint", o.checkpoint, "Checkpoint to score");
  ev->add_option("--test", o.test, "clean | mixed")->check(CLI::IsMember({"clean", "mixed"}));
  ev->add_option("--log", o.log, "Detection log (JSONL); reports its EER only");

  auto* plan = app.add_subcommand("run-plan", "Run the full pre-train / fine-tune grid");
  common(plan, true);
  plan->add_option("--data", o.data, "Corpus directory (synthetic corpus when omitted)");
  plan->add_option("--shots", o.shots, "Override the plan's shot counts");
  plan->add_option("--strategy", o.strategy, "Restrict fine-tuning to one strategy");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    if (!o.out.empty()) fs::create_directories(o.out);
    if (*gen) return cmd_gen_synth(o);
    if (*build) return cmd_build_dataset(o);
    if (*pre) return cmd_pretrain(o);
    if (*fine) return cmd_finetune(o);
    if (*ev) {
      require(!o.log.empty() || (!o.checkpoint.empty() && !o.data.empty()),
              ErrorKind::kInvalidArgument, "evaluate needs --log, or --checkpoint and --data");
      return cmd_evaluate(o);
    }
    if (*plan) return cmd_run_plan(o);
  } catch (const Error& e) {
    std::cerr << "error: " << error_kind_name(e.kind()) << ": " << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: io_error: " << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 1;
}
