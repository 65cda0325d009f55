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
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mixkws/eval.hpp"
#include "mixkws/signal.hpp"
#include "mixkws/strategy.hpp"

namespace mixkws {

// One word occurrence from a forced alignment. Ingested from tab-separated
// lines: utterance_id, word, start_s, end_s, audio_path.
struct AlignmentRecord {
  std::string utterance_id;
  std::string word;
  double start_s = 0.0;
  double end_s = 0.0;
  std::string audio_path;

  friend bool operator==(const AlignmentRecord&, const AlignmentRecord&) = default;
};

// Throws Error(kFormat) naming the offending line.
std::vector<AlignmentRecord> read_alignments(std::istream& in);

// Bijection between keyword ids (dense, from 0) and keyword texts.
class KeywordTable {
 public:
  KeywordTable() = default;
  explicit KeywordTable(std::vector<std::string> texts);

  int size() const { return static_cast<int>(texts_.size()); }
  const std::string& text(int id) const;
  int id(const std::string& text) const;
  bool contains(const std::string& text) const { return index_.contains(text); }
  const std::vector<std::string>& texts() const { return texts_; }

  friend bool operator==(const KeywordTable& a, const KeywordTable& b) {
    return a.texts_ == b.texts_;
  }

 private:
  std::vector<std::string> texts_;
  std::map<std::string, int> index_;
};

// "id<TAB>text" per line, ids in order.
void write_keyword_table(std::ostream& out, const KeywordTable& table);
KeywordTable read_keyword_table(std::istream& in);

enum class Split { kTrain, kValid, kTest };
std::string_view split_name(Split split);
Split parse_split(std::string_view name);

struct ExampleManifestEntry {
  std::string audio_path;
  int keyword_id = 0;
  std::string keyword_text;
  Split split = Split::kTrain;

  friend bool operator==(const ExampleManifestEntry&, const ExampleManifestEntry&) = default;
};

// One JSON object per line.
void write_manifest(std::ostream& out, std::span<const ExampleManifestEntry> entries);
std::vector<ExampleManifestEntry> read_manifest(std::istream& in);

// Checks ids and texts of every entry against the table.
void check_manifest(std::span<const ExampleManifestEntry> entries, const KeywordTable& table);

struct MixedTrial {
  std::string path_a;
  std::string path_b;
  int keyword_a = 0;
  int keyword_b = 0;
  MixWeights weights;
  std::uint64_t trial_seed = 0;

  friend bool operator==(const MixedTrial&, const MixedTrial&) = default;
};

void write_mixed_trials(std::ostream& out, std::span<const MixedTrial> trials);
std::vector<MixedTrial> read_mixed_trials(std::istream& in);

// Waveforms keyed by manifest path.
class AudioStore {
 public:
  void add(const std::string& path, Waveform audio);
  bool contains(const std::string& path) const { return audio_.contains(path); }
  std::shared_ptr<const Waveform> get(const std::string& path) const;
  std::size_t size() const { return audio_.size(); }

  // Loads every path referenced by the entries from root/path. All missing or
  // unreadable files are listed in one Error(kIo).
  static AudioStore load(const std::string& root, std::span<const ExampleManifestEntry> entries,
                         int sample_rate_hz);

 private:
  std::map<std::string, std::shared_ptr<const Waveform>> audio_;
};

// duration_s of audio centred on the word's midpoint; parts of the window
// outside the utterance are zero. Output length is duration_s * rate samples.
Waveform excerpt_keyword(const AlignmentRecord& rec, const Waveform& audio,
                         double duration_s = 1.0);

struct KeywordSelectionOptions {
  int min_letters = 6;   // letters counted as alphabetic characters
  int min_count = 100;   // strictly more occurrences are required
  int cap = 500;         // keep a seeded sample of at most this many
};

struct KeywordSelection {
  KeywordTable keywords;
  // Retained occurrences, sorted by (keyword id, utterance id, start time).
  std::vector<AlignmentRecord> records;
};

// Keywords with at least min_letters letters and more than min_count
// occurrences; ids follow the sorted keyword text.
KeywordSelection select_keywords(std::span<const AlignmentRecord> alignments,
                                 const KeywordSelectionOptions& opts, std::uint64_t seed);

// `repeats` pairwise-disjoint subsets, each holding exactly n examples of
// every keyword in the pool. Throws listing every keyword with fewer than
// n * repeats examples.
std::vector<std::vector<ExampleManifestEntry>> sample_nshot(
    std::span<const ExampleManifestEntry> pool, int n, int repeats, std::uint64_t seed);

// Trials pairing two clean test entries of different keywords with
// mix-training weights. Trial i depends only on (seed, i).
std::vector<MixedTrial> build_2mix_trials(std::span<const ExampleManifestEntry> clean_test,
                                          std::size_t num_trials, std::uint64_t seed);

Waveform render_mixed_trial(const MixedTrial& trial, const AudioStore& audio);

// Conversions into the in-memory forms used by training and scoring.
std::vector<LabeledExample> to_labeled(std::span<const ExampleManifestEntry> entries,
                                       const AudioStore& audio);
TestSet clean_testset(std::span<const ExampleManifestEntry> entries, const AudioStore& audio,
                      int num_keywords);
TestSet mixed_testset(std::span<const MixedTrial> trials, const AudioStore& audio,
                      int num_keywords);

}  // namespace mixkws
