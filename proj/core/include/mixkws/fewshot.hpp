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
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mixkws/corpus.hpp"
#include "mixkws/eval.hpp"
#include "mixkws/model.hpp"
#include "mixkws/strategy.hpp"
#include "mixkws/trainer.hpp"

namespace mixkws {

enum class TestKind { kClean, kMixed };
std::string_view test_name(TestKind kind);
TestKind parse_test(std::string_view name);

struct ExperimentPlan {
  std::vector<StrategyKind> pretrain_strategies{StrategyKind::kClean, StrategyKind::kMixup,
                                                StrategyKind::kMixTraining};
  std::vector<StrategyKind> finetune_strategies{StrategyKind::kClean, StrategyKind::kMixup,
                                                StrategyKind::kMixTraining};
  std::vector<int> shots{15, 30};
  int repeats = 5;
  std::uint64_t master_seed = 0;
  // Kind and seed are filled in per run; the other fields apply to every
  // strategy.
  StrategyConfig strategy;
  BackboneConfig backbone;
  TrainOptions pretrain = with_epochs(30);
  TrainOptions finetune = with_epochs(50);

  static TrainOptions with_epochs(int epochs) {
    TrainOptions o;
    o.epochs = epochs;
    return o;
  }
};

// Throws Error(kConfig) on empty strategy lists, duplicates, or non-positive
// shots or repeats.
void validate_plan(const ExperimentPlan& plan);

struct PretrainResult {
  MetricReport clean;
  MetricReport mixed;
  std::optional<MetricReport> valid;  // logged only, never used for selection
  std::uint64_t backbone_hash = 0;
};

struct CellKey {
  StrategyKind pretrain = StrategyKind::kClean;
  StrategyKind finetune = StrategyKind::kClean;
  int shots = 0;
  TestKind test = TestKind::kClean;

  auto operator<=>(const CellKey&) const = default;
};

// "pretrain/finetune/shots/test", e.g. "mt/clean/15/mixed".
std::string cell_name(const CellKey& key);

struct CellResult {
  AggregateReport summary;
  std::vector<MetricReport> runs;  // one per subset, in subset order
};

struct ResultGrid {
  std::map<StrategyKind, PretrainResult> pretrain;
  std::map<CellKey, CellResult> cells;
};

using ProgressFn = std::function<void(const std::string&)>;

// Pre-trains one backbone per pre-train strategy, then fine-tunes a fresh
// two-layer head on every (fine-tune strategy, shots, subset) with the
// backbone frozen, scoring clean and 2-mix tests. All fine-tune strategies
// see the same subsets and head initialization. The grid is a pure function
// of (plan, corpus); `workers` only changes speed. Failures are rethrown with
// the cell name prefixed.
ResultGrid run_plan(const ExperimentPlan& plan, const Corpus& corpus, int workers = 1,
                    const ProgressFn& progress = {});

// Pre-trained model for one strategy, as used by run_plan.
TrainResult pretrain_model(const ExperimentPlan& plan, const Corpus& corpus, StrategyKind kind,
                           int workers = 1);

// One fine-tuning run of run_plan (subset index `repeat` of `shots`).
TrainResult finetune_model(const ExperimentPlan& plan, const Corpus& corpus,
                           const ModelState& pretrained, StrategyKind pretrain_kind,
                           StrategyKind finetune_kind, int shots, int repeat, int workers = 1);

// A metric read from the grid. Without `finetune` it names a pre-trained
// model result and `shots` is ignored.
struct MetricRef {
  StrategyKind pretrain = StrategyKind::kClean;
  std::optional<StrategyKind> finetune;
  int shots = 0;
  TestKind test = TestKind::kMixed;
  bool eer = true;  // false reads Top-k accuracy
};

std::string metric_name(const MetricRef& ref);
// Pre-trained results give the single value, cells give the subset mean.
double lookup_metric(const ResultGrid& grid, const MetricRef& ref);

// chain[0] < chain[1] < ... strictly, plus value(chain[hi]) - value(chain[lo])
// >= min_gap for every gap constraint.
struct OrderingRule {
  struct Gap {
    std::size_t lo = 0;
    std::size_t hi = 1;
    double min_gap = 0.0;
  };
  std::string name;
  std::vector<MetricRef> chain;
  std::vector<Gap> gaps;
};

struct OrderingCheck {
  std::string name;
  bool pass = false;
  std::string detail;  // every observed value and margin
};

// Throws Error(kInvalidArgument) when a rule names a missing cell.
std::vector<OrderingCheck> check_orderings(const ResultGrid& grid,
                                           const std::vector<OrderingRule>& rules);

// Pre-trained mixed-test EER: mt < mixup < clean with every adjacent gap at
// least min_gap.
OrderingRule pretrain_mixed_eer_rule(double min_gap);
// Mixed-test EER of fine-tuning on the given backbone: mt < mixup < clean,
// mt vs clean gap at least min_gap.
OrderingRule finetune_mixed_eer_rule(StrategyKind pretrain, int shots, double min_gap);

// Deterministic JSON rendering (fixed key order, round-trip doubles).
void write_grid_json(std::ostream& out, const ResultGrid& grid);
// Aligned text tables: pre-trained models, then one block per shot count
// with mean+-std cells in percent.
void write_grid_table(std::ostream& out, const ResultGrid& grid);

}  // namespace mixkws
