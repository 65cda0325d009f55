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

#include "mixkws/corpus.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <utility>

#include "mixkws/error.hpp"
#include "mixkws/hash.hpp"
#include "mixkws/parallel.hpp"
#include "mixkws/rng.hpp"
#include "mixkws/wav.hpp"

namespace mixkws {

namespace fs = std::filesystem;

std::vector<ExampleManifestEntry> CorpusPart::split(Split s) const {
  std::vector<ExampleManifestEntry> out;
  for (const auto& e : entries) {
    if (e.split == s) out.push_back(e);
  }
  return out;
}

const std::vector<std::string>& corpus_split_names() {
  static const std::vector<std::string> names = {"pretrain/train", "pretrain/valid",
                                                 "pretrain/test", "finetune/train",
                                                 "finetune/test"};
  return names;
}

namespace {

struct SplitJob {
  std::string name;
  std::string part;
  Split split;
  int first_generator_id;
  int num_keywords;
  int per_keyword;
};

std::string keyword_text(int generator_id) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "kw%02d", generator_id);
  return buf;
}

std::string audio_path(const std::string& part, Split split, int generator_id, int index) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "/%s_%04d.wav", keyword_text(generator_id).c_str(), index);
  return part + "/audio/" + std::string(split_name(split)) + buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::kIo, "cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::kIo, "cannot read " + path.string());
  return in;
}

}  // namespace

Corpus generate_synthetic_corpus(const SynthCorpusConfig& c, std::uint64_t seed, int workers) {
  require(c.pretrain_keywords >= 2 && c.finetune_keywords >= 2, ErrorKind::kConfig,
          "each phase needs at least two keywords");
  require(c.pretrain_train > 0 && c.pretrain_valid >= 0 && c.pretrain_test > 0 &&
              c.finetune_pool > 0 && c.finetune_test > 0,
          ErrorKind::kConfig, "per-keyword example counts must be positive");
  for (const auto& [name, value] : c.split_seeds) {
    bool known = false;
    for (const auto& n : corpus_split_names()) known |= n == name;
    require(known, ErrorKind::kConfig, "unknown split seed '" + name + "'");
  }

  const int p = c.pretrain_keywords;
  const std::vector<SplitJob> jobs = {
      {"pretrain/train", "pretrain", Split::kTrain, 0, p, c.pretrain_train},
      {"pretrain/valid", "pretrain", Split::kValid, 0, p, c.pretrain_valid},
      {"pretrain/test", "pretrain", Split::kTest, 0, p, c.pretrain_test},
      {"finetune/train", "finetune", Split::kTrain, p, c.finetune_keywords, c.finetune_pool},
      {"finetune/test", "finetune", Split::kTest, p, c.finetune_keywords, c.finetune_test},
  };

  std::map<std::uint64_t, std::string> seen_split_seeds;
  std::vector<std::uint64_t> split_seed(jobs.size());
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const auto it = c.split_seeds.find(jobs[j].name);
    split_seed[j] = it != c.split_seeds.end() ? it->second
                                              : derive_seed(seed, {fnv1a64(jobs[j].name)});
    const auto [prev, inserted] = seen_split_seeds.emplace(split_seed[j], jobs[j].name);
    require(inserted, ErrorKind::kConfig,
            "seed collision between splits " + prev->second + " and " + jobs[j].name);
  }

  struct Item {
    std::size_t job;
    int generator_id;
    int index;
    std::uint64_t variant_seed;
  };
  std::vector<Item> items;
  std::set<std::pair<int, std::uint64_t>> variants;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const auto& job = jobs[j];
    for (int k = 0; k < job.num_keywords; ++k) {
      const int gid = job.first_generator_id + k;
      for (int i = 0; i < job.per_keyword; ++i) {
        const std::uint64_t vs = derive_seed(
            split_seed[j], {static_cast<std::uint64_t>(gid), static_cast<std::uint64_t>(i)});
        require(variants.emplace(gid, vs).second, ErrorKind::kConfig,
                "variant seed collision for keyword " + keyword_text(gid) + " in " + job.name);
        items.push_back({j, gid, i, vs});
      }
    }
  }

  std::vector<Waveform> audio(items.size());
  parallel_for(items.size(), workers, [&](std::size_t i) {
    audio[i] = synth_keyword(items[i].generator_id, items[i].variant_seed, c.duration_s,
                             c.sample_rate_hz, c.params);
  });

  Corpus corpus;
  std::vector<std::string> pre_texts, fine_texts;
  for (int k = 0; k < p; ++k) pre_texts.push_back(keyword_text(k));
  for (int k = 0; k < c.finetune_keywords; ++k) fine_texts.push_back(keyword_text(p + k));
  corpus.pretrain.keywords = KeywordTable(pre_texts);
  corpus.finetune.keywords = KeywordTable(fine_texts);

  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& it = items[i];
    const auto& job = jobs[it.job];
    CorpusPart& part = job.part == "pretrain" ? corpus.pretrain : corpus.finetune;
    const std::string path = audio_path(job.part, job.split, it.generator_id, it.index);
    const int id = it.generator_id - job.first_generator_id;
    part.entries.push_back({path, id, part.keywords.text(id), job.split});
    corpus.audio.add(path, std::move(audio[i]));
  }

  corpus.pretrain.mixed_test =
      build_2mix_trials(corpus.pretrain.split(Split::kTest), c.pretrain_mixed_trials,
                        derive_seed(seed, {fnv1a64("pretrain/mixed")}));
  corpus.finetune.mixed_test =
      build_2mix_trials(corpus.finetune.split(Split::kTest), c.finetune_mixed_trials,
                        derive_seed(seed, {fnv1a64("finetune/mixed")}));
  return corpus;
}

void write_corpus(const Corpus& corpus, const std::string& dir) {
  const fs::path root(dir);
  for (const auto& [name, part] : {std::pair<std::string, const CorpusPart*>{"pretrain", &corpus.pretrain},
                                   {"finetune", &corpus.finetune}}) {
    fs::create_directories(root / name);
    {
      auto out = open_out(root / name / "keywords.tsv");
      write_keyword_table(out, part->keywords);
    }
    {
      auto out = open_out(root / name / "manifest.jsonl");
      write_manifest(out, part->entries);
    }
    {
      auto out = open_out(root / name / "mixed_test.jsonl");
      write_mixed_trials(out, part->mixed_test);
    }
    for (const auto& e : part->entries) {
      const fs::path path = root / e.audio_path;
      fs::create_directories(path.parent_path());
      save_wav(path.string(), *corpus.audio.get(e.audio_path));
    }
  }
}

Corpus load_corpus(const std::string& dir, int sample_rate_hz) {
  const fs::path root(dir);
  Corpus corpus;
  std::vector<ExampleManifestEntry> all;
  for (const auto& [name, part] :
       {std::pair<std::string, CorpusPart*>{"pretrain", &corpus.pretrain},
        {"finetune", &corpus.finetune}}) {
    {
      auto in = open_in(root / name / "keywords.tsv");
      part->keywords = read_keyword_table(in);
    }
    {
      auto in = open_in(root / name / "manifest.jsonl");
      part->entries = read_manifest(in);
    }
    check_manifest(part->entries, part->keywords);
    const fs::path mixed = root / name / "mixed_test.jsonl";
    if (fs::exists(mixed)) {
      auto in = open_in(mixed);
      part->mixed_test = read_mixed_trials(in);
    }
    all.insert(all.end(), part->entries.begin(), part->entries.end());
  }
  corpus.audio = AudioStore::load(dir, all, sample_rate_hz);
  for (const auto* part : {&corpus.pretrain, &corpus.finetune}) {
    for (const auto& t : part->mixed_test) {
      require(corpus.audio.contains(t.path_a) && corpus.audio.contains(t.path_b), ErrorKind::kFormat,
              "mixed trial references audio outside the manifest: " + t.path_a + ", " + t.path_b);
    }
  }
  return corpus;
}

}  // namespace mixkws
