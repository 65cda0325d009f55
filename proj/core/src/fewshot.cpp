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

#include "mixkws/fewshot.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <set>

#include <json.hpp>

#include "mixkws/error.hpp"
#include "mixkws/hash.hpp"
#include "mixkws/rng.hpp"

namespace mixkws {

std::string_view test_name(TestKind kind) {
  return kind == TestKind::kClean ? "clean" : "mixed";
}

TestKind parse_test(std::string_view name) {
  if (name == "clean") return TestKind::kClean;
  if (name == "mixed") return TestKind::kMixed;
  fail(ErrorKind::kInvalidArgument, "unknown test '" + std::string(name) + "' (clean|mixed)");
}

std::string cell_name(const CellKey& key) {
  return std::string(strategy_name(key.pretrain)) + "/" + std::string(strategy_name(key.finetune)) +
         "/" + std::to_string(key.shots) + "/" + std::string(test_name(key.test));
}

void validate_plan(const ExperimentPlan& plan) {
  auto check_list = [](const std::vector<StrategyKind>& list, const char* what) {
    require(!list.empty(), ErrorKind::kConfig, std::string(what) + " strategy list is empty");
    std::set<StrategyKind> seen(list.begin(), list.end());
    require(seen.size() == list.size(), ErrorKind::kConfig,
            std::string(what) + " strategy list has duplicates");
  };
  check_list(plan.pretrain_strategies, "pre-train");
  check_list(plan.finetune_strategies, "fine-tune");
  require(!plan.shots.empty(), ErrorKind::kConfig, "shot list is empty");
  for (int s : plan.shots) require(s > 0, ErrorKind::kConfig, "shot counts must be positive");
  require(std::set<int>(plan.shots.begin(), plan.shots.end()).size() == plan.shots.size(),
          ErrorKind::kConfig, "shot list has duplicates");
  require(plan.repeats > 0, ErrorKind::kConfig, "repeats must be positive");
  validate_backbone_config(plan.backbone);
}

namespace {

std::uint64_t seed_for(std::uint64_t master, const std::string& label,
                       std::initializer_list<std::uint64_t> rest = {}) {
  std::uint64_t s = derive_seed(master, {fnv1a64(label)});
  return rest.size() == 0 ? s : derive_seed(s, rest);
}

std::string name_of(StrategyKind k) { return std::string(strategy_name(k)); }

std::vector<ExampleManifestEntry> shot_subset(const ExperimentPlan& plan, const Corpus& corpus,
                                              int shots, int repeat) {
  require(repeat >= 0 && repeat < plan.repeats, ErrorKind::kInvalidArgument,
          "subset index out of range");
  auto subsets = sample_nshot(corpus.finetune.split(Split::kTrain), shots, plan.repeats,
                              seed_for(plan.master_seed, "subsets",
                                       {static_cast<std::uint64_t>(shots)}));
  return std::move(subsets[static_cast<std::size_t>(repeat)]);
}

MetricReport score(const ModelState& model, const TestSet& test, const FbankOptions& fbank,
                   int workers) {
  return evaluate(score_testset(model, test, fbank, workers));
}

}  // namespace

TrainResult pretrain_model(const ExperimentPlan& plan, const Corpus& corpus, StrategyKind kind,
                           int workers) {
  const auto train_entries = corpus.pretrain.split(Split::kTrain);
  const auto pool = to_labeled(train_entries, corpus.audio);
  const ModelState init = create_model(plan.backbone, corpus.pretrain.keywords.size(),
                                       seed_for(plan.master_seed, "pretrain/init"));
  StrategyConfig strategy = plan.strategy;
  strategy.kind = kind;
  strategy.seed = seed_for(plan.master_seed, "pretrain/strategy/" + name_of(kind));
  TrainOptions opts = plan.pretrain;
  opts.seed = seed_for(plan.master_seed, "pretrain/shuffle");
  opts.workers = workers;
  return train(init, pool, strategy, opts);
}

TrainResult finetune_model(const ExperimentPlan& plan, const Corpus& corpus,
                           const ModelState& pretrained, StrategyKind pretrain_kind,
                           StrategyKind finetune_kind, int shots, int repeat, int workers) {
  const auto subset = shot_subset(plan, corpus, shots, repeat);
  const auto pool = to_labeled(subset, corpus.audio);
  const auto r = static_cast<std::uint64_t>(repeat);
  const auto n = static_cast<std::uint64_t>(shots);
  const ModelState init =
      reinit_head(pretrained, corpus.finetune.keywords.size(),
                  seed_for(plan.master_seed, "finetune/head/" + name_of(pretrain_kind), {n, r}));
  StrategyConfig strategy = plan.strategy;
  strategy.kind = finetune_kind;
  strategy.seed = seed_for(plan.master_seed,
                           "finetune/strategy/" + name_of(pretrain_kind) + "/" +
                               name_of(finetune_kind),
                           {n, r});
  TrainOptions opts = plan.finetune;
  opts.seed = seed_for(plan.master_seed, "finetune/shuffle/" + name_of(pretrain_kind), {n, r});
  opts.workers = workers;
  return train(init, pool, strategy, opts);
}

ResultGrid run_plan(const ExperimentPlan& plan, const Corpus& corpus, int workers,
                    const ProgressFn& progress) {
  validate_plan(plan);
  auto note = [&](const std::string& msg) {
    if (progress) progress(msg);
  };
  const int kp = corpus.pretrain.keywords.size();
  const int kf = corpus.finetune.keywords.size();
  const auto valid_entries = corpus.pretrain.split(Split::kValid);
  const TestSet pre_clean = clean_testset(corpus.pretrain.split(Split::kTest), corpus.audio, kp);
  const TestSet pre_mixed = mixed_testset(corpus.pretrain.mixed_test, corpus.audio, kp);
  const TestSet fine_clean = clean_testset(corpus.finetune.split(Split::kTest), corpus.audio, kf);
  const TestSet fine_mixed = mixed_testset(corpus.finetune.mixed_test, corpus.audio, kf);
  std::optional<TestSet> pre_valid;
  if (!valid_entries.empty()) pre_valid = clean_testset(valid_entries, corpus.audio, kp);
  const FbankOptions& fb_pre = plan.pretrain.fbank;
  const FbankOptions& fb_fine = plan.finetune.fbank;

  ResultGrid grid;
  for (StrategyKind p : plan.pretrain_strategies) {
    const std::string pname = "pretrain " + name_of(p);
    ModelState model;
    try {
      note(pname);
      model = pretrain_model(plan, corpus, p, workers).model;
      PretrainResult res;
      res.clean = score(model, pre_clean, fb_pre, workers);
      res.mixed = score(model, pre_mixed, fb_pre, workers);
      if (pre_valid) res.valid = score(model, *pre_valid, fb_pre, workers);
      res.backbone_hash = model.backbone_hash();
      grid.pretrain[p] = res;
    } catch (const Error& e) {
      fail(e.kind(), pname + ": " + e.what());
    }

    for (int shots : plan.shots) {
      for (StrategyKind f : plan.finetune_strategies) {
        std::vector<MetricReport> clean_runs, mixed_runs;
        for (int r = 0; r < plan.repeats; ++r) {
          const std::string cname = name_of(p) + "/" + name_of(f) + "/" + std::to_string(shots) +
                                    " subset " + std::to_string(r);
          try {
            note("finetune " + cname);
            const ModelState tuned =
                finetune_model(plan, corpus, model, p, f, shots, r, workers).model;
            require(tuned.backbone_hash() == grid.pretrain[p].backbone_hash, ErrorKind::kNumeric,
                    "backbone changed during fine-tuning");
            clean_runs.push_back(score(tuned, fine_clean, fb_fine, workers));
            mixed_runs.push_back(score(tuned, fine_mixed, fb_fine, workers));
          } catch (const Error& e) {
            fail(e.kind(), cname + ": " + e.what());
          }
        }
        grid.cells[{p, f, shots, TestKind::kClean}] = {aggregate_runs(clean_runs), clean_runs};
        grid.cells[{p, f, shots, TestKind::kMixed}] = {aggregate_runs(mixed_runs), mixed_runs};
      }
    }
  }
  return grid;
}

std::string metric_name(const MetricRef& ref) {
  std::string s = name_of(ref.pretrain);
  if (ref.finetune) s += "/" + name_of(*ref.finetune) + "/" + std::to_string(ref.shots);
  s += "/" + std::string(test_name(ref.test));
  s += ref.eer ? " eer" : " acc";
  return s;
}

double lookup_metric(const ResultGrid& grid, const MetricRef& ref) {
  if (!ref.finetune) {
    const auto it = grid.pretrain.find(ref.pretrain);
    require(it != grid.pretrain.end(), ErrorKind::kInvalidArgument,
            "grid has no pre-trained result for " + metric_name(ref));
    const MetricReport& m = ref.test == TestKind::kClean ? it->second.clean : it->second.mixed;
    return ref.eer ? m.eer : m.topk_acc;
  }
  const auto it = grid.cells.find({ref.pretrain, *ref.finetune, ref.shots, ref.test});
  require(it != grid.cells.end(), ErrorKind::kInvalidArgument,
          "grid has no cell for " + metric_name(ref));
  return ref.eer ? it->second.summary.eer.mean : it->second.summary.topk_acc.mean;
}

std::vector<OrderingCheck> check_orderings(const ResultGrid& grid,
                                           const std::vector<OrderingRule>& rules) {
  std::vector<OrderingCheck> out;
  char buf[160];
  for (const auto& rule : rules) {
    require(rule.chain.size() >= 2, ErrorKind::kInvalidArgument,
            "ordering rule '" + rule.name + "' needs at least two metrics");
    std::vector<double> v;
    for (const auto& ref : rule.chain) v.push_back(lookup_metric(grid, ref));
    OrderingCheck c{rule.name, true, ""};
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s%s=%.4f", i ? " " : "", metric_name(rule.chain[i]).c_str(),
                    v[i]);
      c.detail += buf;
    }
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
      const bool ok = v[i] < v[i + 1];
      c.pass = c.pass && ok;
      std::snprintf(buf, sizeof buf, "; [%zu]<[%zu] margin %+.4f%s", i, i + 1, v[i + 1] - v[i],
                    ok ? "" : " FAILED");
      c.detail += buf;
    }
    for (const auto& g : rule.gaps) {
      require(g.lo < v.size() && g.hi < v.size(), ErrorKind::kInvalidArgument,
              "ordering rule '" + rule.name + "' has a gap outside its chain");
      const double gap = v[g.hi] - v[g.lo];
      const bool ok = gap >= g.min_gap;
      c.pass = c.pass && ok;
      std::snprintf(buf, sizeof buf, "; gap [%zu]-[%zu] %.4f (min %.4f)%s", g.hi, g.lo, gap,
                    g.min_gap, ok ? "" : " FAILED");
      c.detail += buf;
    }
    out.push_back(std::move(c));
  }
  return out;
}

OrderingRule pretrain_mixed_eer_rule(double min_gap) {
  OrderingRule r;
  r.name = "pre-trained mixed EER: mt < mixup < clean";
  for (StrategyKind k : {StrategyKind::kMixTraining, StrategyKind::kMixup, StrategyKind::kClean}) {
    r.chain.push_back({k, std::nullopt, 0, TestKind::kMixed, true});
  }
  r.gaps = {{0, 1, min_gap}, {1, 2, min_gap}};
  return r;
}

OrderingRule finetune_mixed_eer_rule(StrategyKind pretrain, int shots, double min_gap) {
  OrderingRule r;
  r.name = name_of(pretrain) + " backbone, " + std::to_string(shots) +
           "-shot mixed EER: mt < mixup < clean";
  for (StrategyKind k : {StrategyKind::kMixTraining, StrategyKind::kMixup, StrategyKind::kClean}) {
    r.chain.push_back({pretrain, k, shots, TestKind::kMixed, true});
  }
  r.gaps = {{0, 2, min_gap}};
  return r;
}

namespace {

nlohmann::ordered_json report_json(const MetricReport& m) {
  nlohmann::ordered_json j;
  j["eer"] = m.eer;
  j["topk_acc"] = m.topk_acc;
  j["k"] = m.k;
  j["n_trials"] = m.n_trials;
  return j;
}

nlohmann::ordered_json summary_json(const MetricSummary& s) {
  nlohmann::ordered_json j;
  j["mean"] = s.mean;
  j["std"] = s.stddev ? nlohmann::ordered_json(*s.stddev) : nlohmann::ordered_json(nullptr);
  return j;
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

std::string pct(const MetricSummary& s) {
  return pct(s.mean) + "+-" + (s.stddev ? pct(*s.stddev) : std::string("n/a"));
}

void print_table(std::ostream& out, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == 0) {
        line += row[c] + std::string(width[c] - row[c].size(), ' ');
      } else {
        line += "  " + std::string(width[c] - row[c].size(), ' ') + row[c];
      }
    }
    out << line << '\n';
  }
}

}  // namespace

void write_grid_json(std::ostream& out, const ResultGrid& grid) {
  nlohmann::ordered_json j;
  j["pretrain"] = nlohmann::ordered_json::array();
  for (const auto& [kind, res] : grid.pretrain) {
    nlohmann::ordered_json p;
    p["strategy"] = name_of(kind);
    p["backbone_hash"] = hex64(res.backbone_hash);
    p["clean"] = report_json(res.clean);
    p["mixed"] = report_json(res.mixed);
    p["valid"] = res.valid ? report_json(*res.valid) : nlohmann::ordered_json(nullptr);
    j["pretrain"].push_back(p);
  }
  j["cells"] = nlohmann::ordered_json::array();
  for (const auto& [key, cell] : grid.cells) {
    nlohmann::ordered_json c;
    c["pretrain"] = name_of(key.pretrain);
    c["finetune"] = name_of(key.finetune);
    c["shots"] = key.shots;
    c["test"] = test_name(key.test);
    c["k"] = cell.summary.k;
    c["acc"] = summary_json(cell.summary.topk_acc);
    c["eer"] = summary_json(cell.summary.eer);
    c["runs"] = nlohmann::ordered_json::array();
    for (const auto& r : cell.runs) c["runs"].push_back(report_json(r));
    j["cells"].push_back(c);
  }
  out << j.dump(2) << '\n';
}

void write_grid_table(std::ostream& out, const ResultGrid& grid) {
  out << "Pre-trained models (percent)\n";
  std::vector<std::vector<std::string>> rows = {
      {"pre-train", "clean ACC", "clean EER", "mixed ACC", "mixed EER"}};
  for (const auto& [kind, res] : grid.pretrain) {
    rows.push_back({name_of(kind), pct(res.clean.topk_acc), pct(res.clean.eer),
                    pct(res.mixed.topk_acc), pct(res.mixed.eer)});
  }
  print_table(out, rows);

  std::set<int> shots;
  for (const auto& [key, cell] : grid.cells) shots.insert(key.shots);
  for (auto it = shots.rbegin(); it != shots.rend(); ++it) {
    out << '\n' << *it << "-shot fine-tuning (percent, mean+-std over subsets)\n";
    rows = {{"pre-train", "fine-tune", "clean ACC", "clean EER", "mixed ACC", "mixed EER"}};
    for (const auto& [key, cell] : grid.cells) {
      if (key.shots != *it || key.test != TestKind::kClean) continue;
      const auto& mixed = grid.cells.at({key.pretrain, key.finetune, key.shots, TestKind::kMixed});
      rows.push_back({name_of(key.pretrain), name_of(key.finetune), pct(cell.summary.topk_acc),
                      pct(cell.summary.eer), pct(mixed.summary.topk_acc),
                      pct(mixed.summary.eer)});
    }
    print_table(out, rows);
  }
}

}  // namespace mixkws
