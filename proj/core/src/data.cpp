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

#include "mixkws/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "mixkws/error.hpp"
#include "mixkws/rng.hpp"
#include "mixkws/wav.hpp"

namespace mixkws {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

double parse_seconds(const std::string& field, std::size_t line_no, const char* what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(field, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used == field.size() && used > 0 && std::isfinite(v), ErrorKind::kFormat,
          "alignment line " + std::to_string(line_no) + ": bad " + what + " '" + field + "'");
  return v;
}

int count_letters(const std::string& word) {
  int n = 0;
  for (unsigned char c : word) n += std::isalpha(c) != 0;
  return n;
}

template <typename Fn>
void for_each_json_line(std::istream& in, const char* what, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      fail(ErrorKind::kFormat,
           std::string(what) + " line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      fail(e.kind(), std::string(what) + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace

std::vector<AlignmentRecord> read_alignments(std::istream& in) {
  std::vector<AlignmentRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    require(fields.size() == 5, ErrorKind::kFormat,
            "alignment line " + std::to_string(line_no) + ": expected 5 tab-separated fields, got " +
                std::to_string(fields.size()));
    AlignmentRecord r{fields[0], fields[1], parse_seconds(fields[2], line_no, "start time"),
                      parse_seconds(fields[3], line_no, "end time"), fields[4]};
    require(r.start_s >= 0.0 && r.start_s < r.end_s, ErrorKind::kFormat,
            "alignment line " + std::to_string(line_no) + ": need 0 <= start < end");
    require(!r.utterance_id.empty() && !r.word.empty() && !r.audio_path.empty(),
            ErrorKind::kFormat, "alignment line " + std::to_string(line_no) + ": empty field");
    out.push_back(std::move(r));
  }
  return out;
}

KeywordTable::KeywordTable(std::vector<std::string> texts) : texts_(std::move(texts)) {
  for (std::size_t i = 0; i < texts_.size(); ++i) {
    require(!texts_[i].empty(), ErrorKind::kInvalidArgument, "empty keyword text");
    const bool inserted = index_.emplace(texts_[i], static_cast<int>(i)).second;
    require(inserted, ErrorKind::kInvalidArgument, "duplicate keyword '" + texts_[i] + "'");
  }
}

const std::string& KeywordTable::text(int id) const {
  require(id >= 0 && id < size(), ErrorKind::kInvalidArgument,
          "keyword id " + std::to_string(id) + " not in table");
  return texts_[static_cast<std::size_t>(id)];
}

int KeywordTable::id(const std::string& text) const {
  const auto it = index_.find(text);
  require(it != index_.end(), ErrorKind::kInvalidArgument, "keyword '" + text + "' not in table");
  return it->second;
}

void write_keyword_table(std::ostream& out, const KeywordTable& table) {
  for (int i = 0; i < table.size(); ++i) out << i << '\t' << table.text(i) << '\n';
}

KeywordTable read_keyword_table(std::istream& in) {
  std::vector<std::string> texts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    require(tab != std::string::npos, ErrorKind::kFormat,
            "keyword table line " + std::to_string(line_no) + ": missing tab");
    require(line.substr(0, tab) == std::to_string(texts.size()), ErrorKind::kFormat,
            "keyword table line " + std::to_string(line_no) + ": ids must be 0, 1, 2, ...");
    texts.push_back(line.substr(tab + 1));
  }
  return KeywordTable(std::move(texts));
}

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "?";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "valid") return Split::kValid;
  if (name == "test") return Split::kTest;
  fail(ErrorKind::kFormat, "unknown split '" + std::string(name) + "'");
}

void write_manifest(std::ostream& out, std::span<const ExampleManifestEntry> entries) {
  for (const auto& e : entries) {
    ordered_json j;
    j["audio_path"] = e.audio_path;
    j["keyword_id"] = e.keyword_id;
    j["keyword_text"] = e.keyword_text;
    j["split"] = split_name(e.split);
    out << j.dump() << '\n';
  }
}

std::vector<ExampleManifestEntry> read_manifest(std::istream& in) {
  std::vector<ExampleManifestEntry> out;
  for_each_json_line(in, "manifest", [&](const json& j) {
    out.push_back({j.at("audio_path").get<std::string>(), j.at("keyword_id").get<int>(),
                   j.at("keyword_text").get<std::string>(),
                   parse_split(j.at("split").get<std::string>())});
  });
  return out;
}

void check_manifest(std::span<const ExampleManifestEntry> entries, const KeywordTable& table) {
  for (const auto& e : entries) {
    require(e.keyword_id >= 0 && e.keyword_id < table.size() &&
                table.text(e.keyword_id) == e.keyword_text,
            ErrorKind::kFormat,
            "manifest entry " + e.audio_path + " (" + std::to_string(e.keyword_id) + ", '" +
                e.keyword_text + "') disagrees with the keyword table");
  }
}

void write_mixed_trials(std::ostream& out, std::span<const MixedTrial> trials) {
  for (const auto& t : trials) {
    ordered_json j;
    j["path_a"] = t.path_a;
    j["path_b"] = t.path_b;
    j["keyword_a"] = t.keyword_a;
    j["keyword_b"] = t.keyword_b;
    j["w1"] = t.weights.w1;
    j["w2"] = t.weights.w2;
    j["trial_seed"] = t.trial_seed;
    out << j.dump() << '\n';
  }
}

std::vector<MixedTrial> read_mixed_trials(std::istream& in) {
  std::vector<MixedTrial> out;
  for_each_json_line(in, "mixed-trial manifest", [&](const json& j) {
    MixedTrial t{j.at("path_a").get<std::string>(),
                 j.at("path_b").get<std::string>(),
                 j.at("keyword_a").get<int>(),
                 j.at("keyword_b").get<int>(),
                 {j.at("w1").get<double>(), j.at("w2").get<double>()},
                 j.at("trial_seed").get<std::uint64_t>()};
    require(t.keyword_a != t.keyword_b, ErrorKind::kFormat,
            "mixed trial pairs a keyword with itself");
    out.push_back(std::move(t));
  });
  return out;
}

void AudioStore::add(const std::string& path, Waveform audio) {
  audio_[path] = std::make_shared<const Waveform>(std::move(audio));
}

std::shared_ptr<const Waveform> AudioStore::get(const std::string& path) const {
  const auto it = audio_.find(path);
  require(it != audio_.end(), ErrorKind::kIo, "no audio loaded for '" + path + "'");
  return it->second;
}

AudioStore AudioStore::load(const std::string& root, std::span<const ExampleManifestEntry> entries,
                            int sample_rate_hz) {
  AudioStore store;
  std::vector<std::string> problems;
  for (const auto& e : entries) {
    if (store.contains(e.audio_path)) continue;
    const auto full = (std::filesystem::path(root) / e.audio_path).string();
    try {
      store.add(e.audio_path, load_wav(full, sample_rate_hz));
    } catch (const Error& err) {
      problems.push_back(err.what());
    }
  }
  if (!problems.empty()) {
    std::string msg = std::to_string(problems.size()) + " audio file(s) missing or unreadable:";
    for (const auto& p : problems) msg += "\n  " + p;
    fail(ErrorKind::kIo, msg);
  }
  return store;
}

Waveform excerpt_keyword(const AlignmentRecord& rec, const Waveform& audio, double duration_s) {
  require(!audio.empty(), ErrorKind::kInvalidArgument, "empty utterance audio");
  require(duration_s > 0.0, ErrorKind::kInvalidArgument, "excerpt duration must be positive");
  require(rec.start_s >= 0.0 && rec.start_s < rec.end_s && rec.end_s <= audio.duration_s() + 1e-9,
          ErrorKind::kInvalidArgument,
          "alignment [" + std::to_string(rec.start_s) + ", " + std::to_string(rec.end_s) +
              "] s lies outside the " + std::to_string(audio.duration_s()) + " s utterance " +
              rec.utterance_id);
  const double rate = audio.sample_rate_hz;
  const auto length = static_cast<long long>(std::llround(duration_s * rate));
  const double centre = 0.5 * (rec.start_s + rec.end_s);
  const auto first = static_cast<long long>(std::llround((centre - 0.5 * duration_s) * rate));

  Waveform out;
  out.sample_rate_hz = audio.sample_rate_hz;
  out.samples.assign(static_cast<std::size_t>(length), 0.0);
  const auto total = static_cast<long long>(audio.size());
  for (long long i = 0; i < length; ++i) {
    const long long src = first + i;
    if (src >= 0 && src < total) {
      out.samples[static_cast<std::size_t>(i)] = audio.samples[static_cast<std::size_t>(src)];
    }
  }
  return out;
}

KeywordSelection select_keywords(std::span<const AlignmentRecord> alignments,
                                 const KeywordSelectionOptions& opts, std::uint64_t seed) {
  require(!alignments.empty(), ErrorKind::kInvalidArgument, "no alignments given");
  std::map<std::string, std::vector<AlignmentRecord>> by_word;
  for (const auto& r : alignments) by_word[r.word].push_back(r);

  std::size_t too_short = 0, too_rare = 0;
  std::vector<std::string> kept;
  for (const auto& [word, recs] : by_word) {
    if (count_letters(word) < opts.min_letters) {
      ++too_short;
    } else if (static_cast<int>(recs.size()) <= opts.min_count) {
      ++too_rare;
    } else {
      kept.push_back(word);
    }
  }
  require(!kept.empty(), ErrorKind::kInvalidArgument,
          "no keyword qualifies: " + std::to_string(by_word.size()) + " distinct words, " +
              std::to_string(too_short) + " shorter than " + std::to_string(opts.min_letters) +
              " letters, " + std::to_string(too_rare) + " with at most " +
              std::to_string(opts.min_count) + " occurrences");

  KeywordSelection out;
  out.keywords = KeywordTable(kept);
  auto order = [](const AlignmentRecord& a, const AlignmentRecord& b) {
    return std::tie(a.utterance_id, a.start_s, a.end_s, a.audio_path) <
           std::tie(b.utterance_id, b.start_s, b.end_s, b.audio_path);
  };
  for (int id = 0; id < out.keywords.size(); ++id) {
    auto recs = by_word.at(out.keywords.text(id));
    std::sort(recs.begin(), recs.end(), order);
    if (static_cast<int>(recs.size()) > opts.cap) {
      Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(id), 0x434150}));
      std::shuffle(recs.begin(), recs.end(), rng.engine());
      recs.resize(static_cast<std::size_t>(opts.cap));
      std::sort(recs.begin(), recs.end(), order);
    }
    out.records.insert(out.records.end(), recs.begin(), recs.end());
  }
  return out;
}

std::vector<std::vector<ExampleManifestEntry>> sample_nshot(
    std::span<const ExampleManifestEntry> pool, int n, int repeats, std::uint64_t seed) {
  require(n > 0 && repeats > 0, ErrorKind::kInvalidArgument, "n and repeats must be positive");
  require(!pool.empty(), ErrorKind::kInvalidArgument, "empty few-shot pool");
  std::map<int, std::vector<ExampleManifestEntry>> by_keyword;
  for (const auto& e : pool) by_keyword[e.keyword_id].push_back(e);

  const auto needed = static_cast<std::size_t>(n) * static_cast<std::size_t>(repeats);
  std::string short_list;
  for (const auto& [id, entries] : by_keyword) {
    if (entries.size() < needed) {
      short_list += " " + entries.front().keyword_text + "(" + std::to_string(entries.size()) + ")";
    }
  }
  require(short_list.empty(), ErrorKind::kInvalidArgument,
          "pool too small for " + std::to_string(repeats) + " disjoint " + std::to_string(n) +
              "-shot subsets (" + std::to_string(needed) + " needed per keyword):" + short_list);

  std::vector<std::vector<ExampleManifestEntry>> subsets(static_cast<std::size_t>(repeats));
  for (auto& [id, entries] : by_keyword) {
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.audio_path < b.audio_path; });
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(id), 0x4e53484f54}));
    std::shuffle(entries.begin(), entries.end(), rng.engine());
    for (std::size_t r = 0; r < subsets.size(); ++r) {
      const auto begin = entries.begin() + static_cast<std::ptrdiff_t>(r * static_cast<std::size_t>(n));
      subsets[r].insert(subsets[r].end(), begin, begin + n);
    }
  }
  for (auto& s : subsets) {
    std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) {
      return std::tie(a.keyword_id, a.audio_path) < std::tie(b.keyword_id, b.audio_path);
    });
  }
  return subsets;
}

std::vector<MixedTrial> build_2mix_trials(std::span<const ExampleManifestEntry> clean_test,
                                          std::size_t num_trials, std::uint64_t seed) {
  require(!clean_test.empty(), ErrorKind::kInvalidArgument, "empty clean test set");
  std::vector<ExampleManifestEntry> entries(clean_test.begin(), clean_test.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return std::tie(a.keyword_id, a.audio_path) < std::tie(b.keyword_id, b.audio_path);
  });
  require(entries.front().keyword_id != entries.back().keyword_id, ErrorKind::kInvalidArgument,
          "2-mix trials need at least two distinct keywords in the clean test set");

  std::vector<MixedTrial> trials;
  trials.reserve(num_trials);
  for (std::size_t i = 0; i < num_trials; ++i) {
    const std::uint64_t trial_seed = derive_seed(seed, {i, 0x324d4958});
    Rng rng(trial_seed);
    const auto& a = entries[rng.index(entries.size())];
    const ExampleManifestEntry* b = nullptr;
    do {
      b = &entries[rng.index(entries.size())];
    } while (b->keyword_id == a.keyword_id);
    trials.push_back({a.audio_path, b->audio_path, a.keyword_id, b->keyword_id,
                      sample_mt_weights(rng), trial_seed});
  }
  return trials;
}

Waveform render_mixed_trial(const MixedTrial& trial, const AudioStore& audio) {
  return mix_waveforms(*audio.get(trial.path_a), *audio.get(trial.path_b), trial.weights);
}

std::vector<LabeledExample> to_labeled(std::span<const ExampleManifestEntry> entries,
                                       const AudioStore& audio) {
  std::vector<LabeledExample> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back({audio.get(e.audio_path), e.keyword_id});
  return out;
}

TestSet clean_testset(std::span<const ExampleManifestEntry> entries, const AudioStore& audio,
                      int num_keywords) {
  TestSet t;
  t.num_keywords = num_keywords;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    t.trials.push_back({i, *audio.get(entries[i].audio_path), {entries[i].keyword_id}});
  }
  return t;
}

TestSet mixed_testset(std::span<const MixedTrial> trials, const AudioStore& audio,
                      int num_keywords) {
  TestSet t;
  t.num_keywords = num_keywords;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    t.trials.push_back({i, render_mixed_trial(trials[i], audio),
                        {trials[i].keyword_a, trials[i].keyword_b}});
  }
  return t;
}

}  // namespace mixkws
