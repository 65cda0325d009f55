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

#include <filesystem>
#include <set>
#include <sstream>

#include "mixkws/data.hpp"
#include "mixkws/error.hpp"
#include "mixkws/wav.hpp"

using namespace mixkws;

namespace {

std::vector<ExampleManifestEntry> pool_of(int keywords, int per_keyword) {
  std::vector<ExampleManifestEntry> out;
  for (int k = 0; k < keywords; ++k) {
    for (int i = 0; i < per_keyword; ++i) {
      out.push_back({"k" + std::to_string(k) + "/" + std::to_string(i) + ".wav", k,
                     "word" + std::to_string(k), Split::kTrain});
    }
  }
  return out;
}

std::vector<AlignmentRecord> occurrences(const std::string& word, int n) {
  std::vector<AlignmentRecord> out;
  for (int i = 0; i < n; ++i) {
    out.push_back({"utt" + std::to_string(i), word, 0.5, 0.9, "a.wav"});
  }
  return out;
}

}  // namespace

TEST_CASE("alignment TSV parsing") {
  std::istringstream in(
      "# header comment\n"
      "u1\tmarvin\t0.10\t0.55\taudio/u1.wav\n"
      "\n"
      "u2\tsheila\t1.5\t2.0\taudio/u2.wav\r\n");
  const auto recs = read_alignments(in);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0] == AlignmentRecord{"u1", "marvin", 0.10, 0.55, "audio/u1.wav"});
  CHECK(recs[1].audio_path == "audio/u2.wav");
}

TEST_CASE("alignment errors name the line") {
  auto expect_line = [](const std::string& text, const std::string& needle) {
    std::istringstream in(text);
    try {
      read_alignments(in);
      FAIL("expected rejection");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kFormat);
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_line("u\tw\t0\t1\ta.wav\nu\tw\t0\t1\n", "line 2");
  expect_line("u\tw\tzero\t1\ta.wav\n", "line 1");
  expect_line("u\tw\t0.5\t0.5\ta.wav\n", "line 1");
  expect_line("u\tw\t-1\t0.5\ta.wav\n", "line 1");
}

TEST_CASE("keyword tables are bijections") {
  const KeywordTable t({"alpha", "bravo"});
  CHECK(t.size() == 2);
  CHECK(t.id("bravo") == 1);
  CHECK(t.text(0) == "alpha");
  CHECK_THROWS_AS(t.id("charlie"), Error);
  CHECK_THROWS_AS(t.text(2), Error);
  CHECK_THROWS_AS(KeywordTable({"a", "a"}), Error);

  std::stringstream io;
  write_keyword_table(io, t);
  CHECK(io.str() == "0\talpha\n1\tbravo\n");
  CHECK(read_keyword_table(io) == t);
  std::istringstream bad("1\talpha\n");
  CHECK_THROWS_AS(read_keyword_table(bad), Error);
}

TEST_CASE("manifests and mixed trials round trip") {
  const std::vector<ExampleManifestEntry> entries{{"a.wav", 0, "alpha", Split::kTrain},
                                                  {"b.wav", 1, "bravo", Split::kTest}};
  std::stringstream io;
  write_manifest(io, entries);
  CHECK(read_manifest(io) == entries);

  const std::vector<MixedTrial> trials{{"a.wav", "b.wav", 0, 1, {0.3, 0.7}, 42}};
  std::stringstream io2;
  write_mixed_trials(io2, trials);
  CHECK(read_mixed_trials(io2) == trials);

  const KeywordTable table({"alpha", "bravo"});
  CHECK_NOTHROW(check_manifest(entries, table));
  const std::vector<ExampleManifestEntry> wrong{{"a.wav", 1, "alpha", Split::kTrain}};
  CHECK_THROWS_AS(check_manifest(wrong, table), Error);

  std::istringstream bad("{\"audio_path\": \"a.wav\"}\n");
  CHECK_THROWS_AS(read_manifest(bad), Error);
  CHECK(parse_split("valid") == Split::kValid);
  CHECK_THROWS_AS(parse_split("dev"), Error);
}

TEST_CASE("keyword selection applies length, count and cap") {
  std::vector<AlignmentRecord> all;
  for (const auto& r : occurrences("forward", 600)) all.push_back(r);   // capped
  for (const auto& r : occurrences("learning", 150)) all.push_back(r);  // kept
  for (const auto& r : occurrences("visual", 101)) all.push_back(r);    // 6 letters, kept
  for (const auto& r : occurrences("follow", 100)) all.push_back(r);    // not more than 100
  for (const auto& r : occurrences("cat", 900)) all.push_back(r);       // too short
  for (const auto& r : occurrences("house", 300)) all.push_back(r);     // 5 letters
  for (const auto& r : occurrences("it's-a", 300)) all.push_back(r);    // 4 letters

  const KeywordSelection sel = select_keywords(all, {}, 1);
  CHECK(sel.keywords.texts() == std::vector<std::string>{"forward", "learning", "visual"});
  std::map<std::string, int> counts;
  for (const auto& r : sel.records) counts[r.word]++;
  CHECK(counts["forward"] == 500);
  CHECK(counts["learning"] == 150);
  CHECK(counts["visual"] == 101);
  CHECK(counts.count("cat") == 0);

  const KeywordSelection again = select_keywords(all, {}, 1);
  CHECK(again.records == sel.records);
  const KeywordSelection other = select_keywords(all, {}, 2);
  CHECK_FALSE(other.records == sel.records);

  CHECK_THROWS_AS(select_keywords(occurrences("cat", 200), {}, 1), Error);
}

TEST_CASE("excerpts are centred on the word") {
  Waveform utt;
  utt.samples.resize(32000);
  for (std::size_t i = 0; i < utt.size(); ++i) utt.samples[i] = static_cast<double>(i) / 40000.0;

  const Waveform mid = excerpt_keyword({"u", "w", 0.9, 1.1, "a"}, utt);
  REQUIRE(mid.size() == 16000);
  CHECK(mid.samples[0] == utt.samples[8000]);
  CHECK(mid.samples[15999] == utt.samples[23999]);

  const Waveform start = excerpt_keyword({"u", "w", 0.0, 0.2, "a"}, utt);
  CHECK(start.samples[0] == 0.0);
  CHECK(start.samples[6399] == 0.0);
  CHECK(start.samples[6400] == utt.samples[0]);

  const Waveform end = excerpt_keyword({"u", "w", 1.9, 2.0, "a"}, utt);
  CHECK(end.samples[15999] == 0.0);

  CHECK_THROWS_AS(excerpt_keyword({"u", "w", 1.5, 2.5, "a"}, utt), Error);
}

TEST_CASE("N-shot subsets are exact and disjoint") {
  const auto pool = pool_of(4, 75);
  const auto subsets = sample_nshot(pool, 15, 5, 3);
  REQUIRE(subsets.size() == 5);
  std::set<std::string> used;
  for (const auto& s : subsets) {
    std::map<int, int> per_keyword;
    for (const auto& e : s) {
      per_keyword[e.keyword_id]++;
      CHECK(used.insert(e.audio_path).second);
    }
    CHECK(per_keyword.size() == 4);
    for (const auto& [k, n] : per_keyword) CHECK(n == 15);
  }
  CHECK(sample_nshot(pool, 15, 5, 3) == subsets);
  CHECK_FALSE(sample_nshot(pool, 15, 5, 4) == subsets);
  CHECK(sample_nshot(pool, 1, 1, 0).front().size() == 4);
}

TEST_CASE("N-shot sampling names every short keyword") {
  auto pool = pool_of(3, 20);
  pool.resize(pool.size() - 5);  // word2 keeps 15
  try {
    sample_nshot(pool, 10, 2, 1);
    FAIL("expected rejection");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("word2(15)") != std::string::npos);
    CHECK(msg.find("word0") == std::string::npos);
  }
}

TEST_CASE("2-mix trials pair different keywords") {
  auto test = pool_of(4, 5);
  for (auto& e : test) e.split = Split::kTest;
  const auto trials = build_2mix_trials(test, 300, 5);
  REQUIRE(trials.size() == 300);
  for (const auto& t : trials) {
    CHECK(t.keyword_a != t.keyword_b);
    CHECK(t.weights.w1 >= 0.1);
    CHECK(t.weights.w1 <= 0.9);
    CHECK(std::abs(t.weights.w1 + t.weights.w2 - 1.0) <= 1e-12);
  }
  const auto prefix = build_2mix_trials(test, 10, 5);
  for (std::size_t i = 0; i < prefix.size(); ++i) CHECK(prefix[i] == trials[i]);
  CHECK_THROWS_AS(build_2mix_trials(pool_of(1, 5), 3, 1), Error);
}

TEST_CASE("test sets carry their truth sets") {
  AudioStore store;
  store.add("a.wav", Waveform{{0.2, 0.4}, 16000});
  store.add("b.wav", Waveform{{0.6, -0.2}, 16000});
  const std::vector<ExampleManifestEntry> clean{{"a.wav", 0, "x", Split::kTest},
                                                {"b.wav", 1, "y", Split::kTest}};
  const TestSet c = clean_testset(clean, store, 2);
  CHECK(c.trials[1].truth == std::vector<int>{1});
  const std::vector<MixedTrial> trials{{"a.wav", "b.wav", 0, 1, {0.25, 0.75}, 1}};
  const TestSet m = mixed_testset(trials, store, 2);
  CHECK(m.trials[0].truth == std::vector<int>{0, 1});
  CHECK(m.trials[0].audio.samples[0] == doctest::Approx(0.25 * 0.2 + 0.75 * 0.6));
  CHECK(to_labeled(clean, store)[1].keyword == 1);
  CHECK_THROWS_AS(store.get("c.wav"), Error);
}

TEST_CASE("loading audio lists every missing file") {
  const auto dir = std::filesystem::temp_directory_path() / "mixkws_data_test";
  std::filesystem::create_directories(dir);
  save_wav((dir / "ok.wav").string(), Waveform{{0.1}, 16000});
  const std::vector<ExampleManifestEntry> entries{{"ok.wav", 0, "a", Split::kTrain},
                                                  {"gone1.wav", 0, "a", Split::kTrain},
                                                  {"gone2.wav", 0, "a", Split::kTrain}};
  try {
    AudioStore::load(dir.string(), entries, 16000);
    FAIL("expected rejection");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(e.kind() == ErrorKind::kIo);
    CHECK(msg.find("gone1.wav") != std::string::npos);
    CHECK(msg.find("gone2.wav") != std::string::npos);
  }
  const std::vector<ExampleManifestEntry> good{entries[0]};
  CHECK(AudioStore::load(dir.string(), good, 16000).size() == 1);
  std::filesystem::remove_all(dir);
}
