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
#include <map>
#include <string>
#include <vector>

#include "mixkws/data.hpp"
#include "mixkws/synth.hpp"

namespace mixkws {

// Keywords, examples and 2-mix trials of one experiment phase.
struct CorpusPart {
  KeywordTable keywords;
  std::vector<ExampleManifestEntry> entries;
  std::vector<MixedTrial> mixed_test;

  std::vector<ExampleManifestEntry> split(Split s) const;
};

// Pre-training and few-shot data with the audio they reference. For the
// fine-tune part the train split is the few-shot pool.
struct Corpus {
  AudioStore audio;
  CorpusPart pretrain;
  CorpusPart finetune;
};

// Per-keyword example counts of the synthetic corpus.
struct SynthCorpusConfig {
  int pretrain_keywords = 8;
  int pretrain_train = 120;
  int pretrain_valid = 5;
  int pretrain_test = 25;
  int finetune_keywords = 4;
  int finetune_pool = 100;
  int finetune_test = 25;
  std::size_t pretrain_mixed_trials = 500;
  std::size_t finetune_mixed_trials = 500;
  double duration_s = 1.0;
  int sample_rate_hz = kDefaultSampleRate;
  SynthParams params;
  // Optional explicit seeds per split, keyed "pretrain/train", "pretrain/valid",
  // "pretrain/test", "finetune/train", "finetune/test". Missing ones are
  // derived from the master seed.
  std::map<std::string, std::uint64_t> split_seeds;
};

// Names of the split seeds, in generation order.
const std::vector<std::string>& corpus_split_names();

// Pre-train keywords use generator ids 0..P-1 and fine-tune keywords
// P..P+F-1, so the two keyword sets never share a frequency pattern. Throws
// Error(kConfig) when two splits share a seed or any two examples of a
// keyword share a variant seed.
Corpus generate_synthetic_corpus(const SynthCorpusConfig& config, std::uint64_t seed,
                                 int workers = 1);

// Layout under dir: {pretrain,finetune}/keywords.tsv, manifest.jsonl,
// mixed_test.jsonl and the WAV files named by the manifests (paths relative
// to dir).
void write_corpus(const Corpus& corpus, const std::string& dir);
Corpus load_corpus(const std::string& dir, int sample_rate_hz = kDefaultSampleRate);

}  // namespace mixkws
