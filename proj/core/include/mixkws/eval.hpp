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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixkws/features.hpp"
#include "mixkws/model.hpp"
#include "mixkws/signal.hpp"

namespace mixkws {

struct DetectionTrial {
  std::uint64_t trial_id = 0;
  int keyword_id = 0;
  double score = 0.0;
  bool is_target = false;

  friend bool operator==(const DetectionTrial&, const DetectionTrial&) = default;
};

using DetectionLog = std::vector<DetectionTrial>;

// Pooled equal error rate. With FRR(t) = P(target score < t) and
// FAR(t) = P(non-target score >= t) evaluated at every distinct score (and
// above the maximum), the EER is read at the sign change of FAR - FRR,
// interpolating linearly between the two bracketing thresholds. Needs at least
// one target and one non-target.
double compute_eer(std::span<const DetectionTrial> log);

// Fraction of trials whose k highest-scoring keywords are exactly the truth
// set. Ties rank the lower keyword id first. Every truth set must have size k.
double topk_accuracy(const Matrix& scores, std::span<const std::vector<int>> truth, int k);

struct MetricReport {
  double eer = 0.0;
  double topk_acc = 0.0;
  int k = 1;
  std::size_t n_trials = 0;
};

struct MetricSummary {
  double mean = 0.0;
  std::optional<double> stddev;  // sample (n - 1) deviation; unset for n < 2
};

struct AggregateReport {
  MetricSummary eer;
  MetricSummary topk_acc;
  int k = 1;
  std::size_t runs = 0;
};

MetricSummary summarize(std::span<const double> values);

// Mean and sample standard deviation per metric. All reports must share k.
AggregateReport aggregate_runs(std::span<const MetricReport> reports);

// One evaluation trial: audio plus the set of keywords present in it.
struct TestTrial {
  std::uint64_t trial_id = 0;
  Waveform audio;
  std::vector<int> truth;
};

struct TestSet {
  int num_keywords = 0;
  std::vector<TestTrial> trials;
};

struct ScoredTestSet {
  DetectionLog log;
  Matrix scores;  // trials x keywords, sigmoid outputs
  std::vector<std::vector<int>> truth;
};

// Sigmoid score of every keyword head for every trial; each (trial, keyword)
// pair becomes one detection entry.
ScoredTestSet score_testset(const ModelState& model, const TestSet& test,
                            const FbankOptions& fbank_opts = {}, int workers = 1);

// EER over the pooled log and Top-k accuracy with k = truth-set size.
MetricReport evaluate(const ScoredTestSet& scored);

// Line-delimited JSON detection records.
void write_detection_log(std::ostream& out, std::span<const DetectionTrial> log);
DetectionLog read_detection_log(std::istream& in);

}  // namespace mixkws
