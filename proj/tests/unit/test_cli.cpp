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

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mixkws/hash.hpp"
#include "mixkws/wav.hpp"

namespace fs = std::filesystem;
using namespace mixkws;

namespace {

struct RunResult {
  int status = -1;
  std::string out;
  std::string err;
};

const fs::path& scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "mixkws_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run(const std::string& args) {
  const fs::path err = scratch() / "stderr.txt";
  const std::string cmd = std::string(MIXKWS_CLI) + " " + args + " 2>" + err.string();
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err);
  return r;
}

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

// Hash of every file's relative path and bytes.
std::uint64_t tree_hash(const fs::path& root) {
  std::map<std::string, std::uint64_t> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) {
      files[fs::relative(e.path(), root).generic_string()] = hash_file(e.path().string());
    }
  }
  std::string all;
  for (const auto& [name, h] : files) all += name + ":" + std::to_string(h) + "\n";
  return fnv1a64(all);
}

std::string last_line(std::string text) {
  while (!text.empty() && text.back() == '\n') text.pop_back();
  const std::size_t start = text.rfind('\n');
  return start == std::string::npos ? text : text.substr(start + 1);
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

const char* kTinyConfig = R"({
  "pretrain": {"epochs": 2, "average_last": 2},
  "finetune": {"epochs": 2, "average_last": 2},
  "synth": {"pretrain_keywords": 3, "pretrain_train": 6, "pretrain_valid": 1, "pretrain_test": 3,
            "finetune_keywords": 3, "finetune_pool": 6, "finetune_test": 3,
            "pretrain_mixed_trials": 12, "finetune_mixed_trials": 12, "duration_s": 0.5},
  "plan": {"shots": [2], "repeats": 2}
})";

fs::path tiny_config() {
  const fs::path p = scratch() / "tiny.json";
  if (!fs::exists(p)) write_file(p, kTinyConfig);
  return p;
}

std::string base_args(const std::string& sub, const fs::path& out) {
  return sub + " --config " + tiny_config().string() + " --seed 4 --out " + out.string();
}

}  // namespace

TEST_CASE("gen-synth is reproducible and writes the configured counts") {
  const fs::path a = scratch() / "synth_a", b = scratch() / "synth_b";
  REQUIRE(run(base_args("gen-synth", a)).status == 0);
  REQUIRE(run(base_args("gen-synth", b) + " --workers 3").status == 0);
  CHECK(tree_hash(a) == tree_hash(b));
  CHECK(count_lines(a / "pretrain" / "manifest.jsonl") == 3 * (6 + 1 + 3));
  CHECK(count_lines(a / "finetune" / "manifest.jsonl") == 3 * (6 + 3));
  CHECK(count_lines(a / "pretrain" / "mixed_test.jsonl") == 12);
  CHECK(count_lines(a / "finetune" / "keywords.tsv") == 3);
  CHECK(fs::exists(a / "provenance.json"));

  const fs::path c = scratch() / "synth_c";
  REQUIRE(run("gen-synth --config " + tiny_config().string() + " --seed 5 --out " + c.string())
              .status == 0);
  CHECK(tree_hash(a) != tree_hash(c));
}

TEST_CASE("distinct split seeds give disjoint audio") {
  const fs::path cfg = scratch() / "seeded.json";
  auto j = nlohmann::json::parse(kTinyConfig);
  j["synth"]["split_seeds"] = {{"pretrain/train", 1}, {"pretrain/valid", 2},
                               {"pretrain/test", 3},  {"finetune/train", 4},
                               {"finetune/test", 5}};
  write_file(cfg, j.dump());
  const fs::path out = scratch() / "synth_seeded";
  REQUIRE(run("gen-synth --config " + cfg.string() + " --out " + out.string()).status == 0);
  std::set<std::uint64_t> contents;
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(out)) {
    if (e.path().extension() != ".wav") continue;
    ++files;
    contents.insert(hash_file(e.path().string()));
  }
  CHECK(files == 3 * 10 + 3 * 9);
  CHECK(contents.size() == files);

  j["synth"]["split_seeds"]["pretrain/test"] = 1;
  write_file(cfg, j.dump());
  const RunResult clash =
      run("gen-synth --config " + cfg.string() + " --out " + (scratch() / "clash").string());
  CHECK(clash.status == 1);
  CHECK(last_line(clash.err).rfind("error: config_error: seed collision", 0) == 0);
}

TEST_CASE("pretrain, finetune and evaluate chain together") {
  const fs::path data = scratch() / "chain_data";
  REQUIRE(run(base_args("gen-synth", data)).status == 0);
  const fs::path pre = scratch() / "chain_pre";
  const RunResult p = run(base_args("pretrain", pre) + " --data " + data.string() + " --strategy mt");
  REQUIRE(p.status == 0);
  CHECK(fs::exists(pre / "model.ckpt"));
  CHECK(count_lines(pre / "train_log.jsonl") == 2);

  const fs::path fine = scratch() / "chain_fine";
  const RunResult f = run(base_args("finetune", fine) + " --data " + data.string() +
                          " --checkpoint " + (pre / "model.ckpt").string() +
                          " --strategy mixup --shots 2 --subset 1");
  REQUIRE(f.status == 0);
  const std::string hash = p.out.substr(0, p.out.find('\n'));
  CHECK(f.out.rfind(hash, 0) == 0);
  const auto prov = nlohmann::json::parse(slurp(fine / "provenance.json"));
  CHECK(prov["pretrain_strategy"] == "mt");
  CHECK(prov["subset"] == 1);

  const fs::path ev = scratch() / "chain_eval";
  const RunResult e = run(base_args("evaluate", ev) + " --data " + data.string() +
                          " --checkpoint " + (fine / "model.ckpt").string() + " --test mixed");
  REQUIRE(e.status == 0);
  const auto report = nlohmann::json::parse(e.out);
  CHECK(report["k"] == 2);
  CHECK(report["n_trials"] == 12);
  CHECK(count_lines(ev / "detections.jsonl") == 12 * 3);
}

TEST_CASE("evaluate reports the EER of a detection log") {
  const fs::path log = scratch() / "log.jsonl";
  std::string text;
  const double scores[] = {0.9, 0.8, 0.3, 0.7, 0.2, 0.1};
  for (int i = 0; i < 6; ++i) {
    text += nlohmann::json{{"trial_id", i}, {"keyword_id", 0}, {"score", scores[i]},
                           {"is_target", i < 3}}
                .dump() +
            "\n";
  }
  write_file(log, text);
  const RunResult r = run("evaluate --log " + log.string());
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["eer"].get<double>() == doctest::Approx(1.0 / 3.0));
  CHECK(j["n_entries"] == 6);
}

TEST_CASE("build-dataset selects, caps and splits keywords") {
  const fs::path audio = scratch() / "utts";
  const int utts = 12;
  for (int u = 0; u < utts; ++u) {
    Waveform w;
    w.samples.resize(48000);
    for (std::size_t t = 0; t < w.size(); ++t) {
      w.samples[t] = 0.3 * std::sin(2.0 * std::numbers::pi * (200.0 + 50.0 * u) * t / 16000.0);
    }
    fs::create_directories(audio);
    save_wav((audio / ("u" + std::to_string(u) + ".wav")).string(), w);
  }
  std::string tsv = "# utt\tword\tstart\tend\tpath\n";
  int line = 0;
  auto add = [&](const std::string& word, int n) {
    for (int i = 0; i < n; ++i, ++line) {
      const int u = line % utts;
      const double start = 0.2 + 0.1 * (line % 20);
      tsv += "u" + std::to_string(u) + "\t" + word + "\t" + std::to_string(start) + "\t" +
             std::to_string(start + 0.4) + "\tu" + std::to_string(u) + ".wav\n";
    }
  };
  add("forward", 30);
  add("learning", 15);
  add("visual", 11);
  add("follow", 10);
  add("cat", 50);
  add("house", 40);
  const fs::path align = scratch() / "align.tsv";
  write_file(align, tsv);
  const fs::path cfg = scratch() / "dataset.json";
  write_file(cfg, R"({"dataset": {"min_count": 10, "cap": 20, "mixed_trials": 25},
                    "pretrain": {"epochs": 1, "average_last": 1}})");

  const std::string args = "build-dataset --config " + cfg.string() + " --alignments " +
                           align.string() + " --audio-dir " + audio.string() + " --seed 2";
  const fs::path a = scratch() / "ds_a", b = scratch() / "ds_b";
  REQUIRE(run(args + " --out " + a.string()).status == 0);
  REQUIRE(run(args + " --out " + b.string()).status == 0);
  CHECK(tree_hash(a) == tree_hash(b));

  CHECK(slurp(a / "pretrain" / "keywords.tsv") == "0\tforward\n1\tlearning\n2\tvisual\n");
  std::map<std::string, int> per_word;
  std::map<std::string, int> per_split;
  std::ifstream in(a / "pretrain" / "manifest.jsonl");
  for (std::string l; std::getline(in, l);) {
    const auto j = nlohmann::json::parse(l);
    per_word[j["keyword_text"].get<std::string>()]++;
    per_split[j["split"].get<std::string>()]++;
    CHECK(fs::exists(a / j["audio_path"].get<std::string>()));
  }
  CHECK(per_word == std::map<std::string, int>{{"forward", 20}, {"learning", 15}, {"visual", 11}});
  CHECK(per_split["valid"] == 3);
  CHECK(per_split["test"] == 3);
  CHECK(count_lines(a / "pretrain" / "mixed_test.jsonl") == 25);

  // A second part next to the first makes a corpus the other commands load.
  REQUIRE(run(args + " --part finetune --out " + a.string()).status == 0);
  CHECK(slurp(a / "finetune" / "keywords.tsv") == slurp(a / "pretrain" / "keywords.tsv"));
  const RunResult pre = run("pretrain --config " + cfg.string() + " --data " + a.string() +
                            " --strategy mt --out " + (scratch() / "ds_pre").string());
  CHECK(pre.status == 0);
  CHECK(run(args + " --part bogus --out " + a.string()).status == 2);
}

TEST_CASE("failures exit nonzero with one error line") {
  const RunResult missing = run(base_args("pretrain", scratch() / "nowhere") +
                                " --data " + (scratch() / "no_such_corpus").string() +
                                " --strategy mt");
  CHECK(missing.status == 1);
  CHECK(missing.err.rfind("error: ", 0) == 0);
  CHECK(count_lines(scratch() / "stderr.txt") == 1);

  const RunResult bad_strategy =
      run("evaluate --log " + (scratch() / "log.jsonl").string() + " --test noisy");
  CHECK(bad_strategy.status == 2);
  CHECK(bad_strategy.err.rfind("error: usage:", 0) == 0);

  const fs::path cfg = scratch() / "bad.json";
  write_file(cfg, R"({"pretrain": {"epochz": 1}})");
  const RunResult bad_config =
      run("gen-synth --config " + cfg.string() + " --out " + (scratch() / "x").string());
  CHECK(bad_config.status == 1);
  CHECK(bad_config.err.find("'pretrain.epochz'") != std::string::npos);
  CHECK(std::count(bad_config.err.begin(), bad_config.err.end(), '\n') == 1);

  CHECK(run("frobnicate").status == 2);
}

TEST_CASE("run-plan writes the grid and ordering report") {
  const fs::path out = scratch() / "plan";
  const RunResult r = run(base_args("run-plan", out) + " --workers 2");
  REQUIRE(r.status == 0);
  CHECK(r.out.find("+-") != std::string::npos);
  CHECK(fs::exists(out / "grid.json"));
  CHECK(slurp(out / "grid.txt") != "");
  const std::string orderings = slurp(out / "orderings.txt");
  CHECK(count_lines(out / "orderings.txt") == 2);
  CHECK((orderings.rfind("PASS ", 0) == 0 || orderings.rfind("FAIL ", 0) == 0));
  const auto grid = nlohmann::json::parse(slurp(out / "grid.json"));
  CHECK(grid.is_object());

  const fs::path again = scratch() / "plan_again";
  REQUIRE(run(base_args("run-plan", again)).status == 0);
  CHECK(slurp(out / "grid.json") == slurp(again / "grid.json"));
}
