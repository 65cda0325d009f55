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

#include "mixkws/eval.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include <json.hpp>

#include "mixkws/error.hpp"
#include "mixkws/parallel.hpp"
#include "mixkws/trainer.hpp"

namespace mixkws {

double compute_eer(std::span<const DetectionTrial> log) {
  std::vector<std::pair<double, bool>> entries;
  entries.reserve(log.size());
  std::size_t targets = 0;
  for (const auto& t : log) {
    require(std::isfinite(t.score), ErrorKind::kNumeric, "non-finite detection score");
    entries.emplace_back(t.score, t.is_target);
    targets += t.is_target;
  }
  const std::size_t nontargets = entries.size() - targets;
  require(targets > 0 && nontargets > 0, ErrorKind::kInvalidArgument,
          "EER needs at least one target and one non-target (got " + std::to_string(targets) +
              " targets, " + std::to_string(nontargets) + " non-targets)");
  std::sort(entries.begin(), entries.end());

  const double nt = static_cast<double>(targets);
  const double nn = static_cast<double>(nontargets);
  // Walking thresholds upward: targets_below counts targets with score < t,
  // nontargets_below counts non-targets with score < t.
  std::size_t targets_below = 0;
  std::size_t nontargets_below = 0;
  double prev_frr = 0.0;
  double prev_far = 1.0;
  std::size_t i = 0;
  for (;;) {
    double frr, far;
    if (i < entries.size()) {
      frr = static_cast<double>(targets_below) / nt;
      far = static_cast<double>(nontargets - nontargets_below) / nn;
    } else {
      frr = 1.0;
      far = 0.0;
    }
    const double diff = far - frr;
    if (diff <= 0.0) {
      if (diff == 0.0) return far;
      const double prev_diff = prev_far - prev_frr;
      const double alpha = prev_diff / (prev_diff - diff);
      return prev_frr + alpha * (frr - prev_frr);
    }
    prev_frr = frr;
    prev_far = far;
    // Move past every entry sharing the current score.
    const double score = entries[i].first;
    while (i < entries.size() && entries[i].first == score) {
      if (entries[i].second) {
        ++targets_below;
      } else {
        ++nontargets_below;
      }
      ++i;
    }
  }
}

double topk_accuracy(const Matrix& scores, std::span<const std::vector<int>> truth, int k) {
  require(static_cast<std::size_t>(scores.rows()) == truth.size(), ErrorKind::kShape,
          "score rows and truth sets differ in count");
  require(scores.rows() > 0, ErrorKind::kInvalidArgument, "no trials to score");
  require(k >= 1 && k <= scores.cols(), ErrorKind::kInvalidArgument,
          "k must lie in [1, number of keywords]");
  std::size_t hits = 0;
  std::vector<int> order(static_cast<std::size_t>(scores.cols()));
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    const auto& t = truth[static_cast<std::size_t>(r)];
    require(static_cast<int>(t.size()) == k, ErrorKind::kInvalidArgument,
            "trial " + std::to_string(r) + " has " + std::to_string(t.size()) +
                " true keywords, expected " + std::to_string(k));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores(r, a) > scores(r, b); });
    std::vector<int> top(order.begin(), order.begin() + k);
    std::vector<int> want = t;
    std::sort(top.begin(), top.end());
    std::sort(want.begin(), want.end());
    hits += top == want;
  }
  return static_cast<double>(hits) / static_cast<double>(scores.rows());
}

MetricSummary summarize(std::span<const double> values) {
  require(!values.empty(), ErrorKind::kInvalidArgument, "nothing to summarize");
  MetricSummary s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

AggregateReport aggregate_runs(std::span<const MetricReport> reports) {
  require(!reports.empty(), ErrorKind::kInvalidArgument, "no reports to aggregate");
  AggregateReport out;
  out.k = reports.front().k;
  out.runs = reports.size();
  std::vector<double> eer, acc;
  for (const auto& r : reports) {
    require(r.k == out.k, ErrorKind::kInvalidArgument, "reports mix different k values");
    eer.push_back(r.eer);
    acc.push_back(r.topk_acc);
  }
  out.eer = summarize(eer);
  out.topk_acc = summarize(acc);
  return out;
}

ScoredTestSet score_testset(const ModelState& model, const TestSet& test,
                            const FbankOptions& fbank_opts, int workers) {
  require(test.num_keywords == model.num_keywords, ErrorKind::kInvalidArgument,
          "keyword table mismatch: test set has " + std::to_string(test.num_keywords) +
              " keywords, model head has " + std::to_string(model.num_keywords));
  require(!test.trials.empty(), ErrorKind::kInvalidArgument, "empty test set");
  require(!model.feature_stats.empty(), ErrorKind::kInvalidArgument,
          "model has no feature statistics");

  const std::size_t n = test.trials.size();
  const int k = model.num_keywords;
  ScoredTestSet out;
  out.scores.resize(static_cast<Eigen::Index>(n), k);
  parallel_for(n, workers, [&](std::size_t i) {
    const FeatureMatrix x = model_input(test.trials[i].audio, model.feature_stats, fbank_opts);
    const Vector z = head_logits(model, embed(model, x));
    for (int j = 0; j < k; ++j) out.scores(static_cast<Eigen::Index>(i), j) = sigmoid(z[j]);
  });

  out.log.reserve(n * static_cast<std::size_t>(k));
  out.truth.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& trial = test.trials[i];
    for (int t : trial.truth) {
      require(t >= 0 && t < k, ErrorKind::kInvalidArgument,
              "trial " + std::to_string(trial.trial_id) + " names keyword " + std::to_string(t) +
                  " outside the keyword table");
    }
    for (int j = 0; j < k; ++j) {
      const bool target = std::find(trial.truth.begin(), trial.truth.end(), j) != trial.truth.end();
      out.log.push_back({trial.trial_id, j, out.scores(static_cast<Eigen::Index>(i), j), target});
    }
    out.truth.push_back(trial.truth);
  }
  return out;
}

MetricReport evaluate(const ScoredTestSet& scored) {
  require(!scored.truth.empty(), ErrorKind::kInvalidArgument, "nothing to evaluate");
  MetricReport r;
  r.k = static_cast<int>(scored.truth.front().size());
  r.n_trials = scored.truth.size();
  r.eer = compute_eer(scored.log);
  r.topk_acc = topk_accuracy(scored.scores, scored.truth, r.k);
  return r;
}

void write_detection_log(std::ostream& out, std::span<const DetectionTrial> log) {
  for (const auto& t : log) {
    nlohmann::ordered_json j;
    j["trial_id"] = t.trial_id;
    j["keyword_id"] = t.keyword_id;
    j["score"] = t.score;
    j["is_target"] = t.is_target;
    out << j.dump() << '\n';
  }
}

DetectionLog read_detection_log(std::istream& in) {
  DetectionLog log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      log.push_back({j.at("trial_id").get<std::uint64_t>(), j.at("keyword_id").get<int>(),
                     j.at("score").get<double>(), j.at("is_target").get<bool>()});
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::kFormat,
           "detection log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return log;
}

}  // namespace mixkws
