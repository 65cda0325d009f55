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
#include <fstream>

#include "mixkws/config.hpp"
#include "mixkws/error.hpp"

using namespace mixkws;

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kConfig);
    return e.what();
  }
  FAIL("config was accepted: " << text);
  return {};
}

}  // namespace

TEST_CASE("an empty object gives the defaults") {
  const Config c = parse_config("{}");
  CHECK(config_to_json(c) == config_to_json(default_config()));
  CHECK(c.finetune.learning_rate == 3e-3);
  CHECK(c.pretrain.learning_rate == 1e-3);
  CHECK(c.pretrain.epochs == 30);
  CHECK(c.finetune.epochs == 50);
  CHECK(c.features.num_bins == 80);
  CHECK(c.plan.shots == std::vector<int>{15, 30});
  CHECK(c.plan.repeats == 5);
  CHECK(c.dataset.selection.cap == 500);
}

TEST_CASE("comments are allowed and values override defaults") {
  const Config c = parse_config(R"({
    // training
    "pretrain": {"epochs": 4, "learning_rate": 0.01},
    /* plan */
    "plan": {"shots": [5], "repeats": 2, "finetune_strategies": ["mt", "clean"]},
    "synth": {"split_seeds": {"pretrain/train": 123}},
    "backbone": {"channels": [8, 8], "strides": [2, 1]}
  })");
  CHECK(c.pretrain.epochs == 4);
  CHECK(c.pretrain.learning_rate == 0.01);
  CHECK(c.plan.shots == std::vector<int>{5});
  CHECK(c.plan.finetune_strategies ==
        std::vector<StrategyKind>{StrategyKind::kMixTraining, StrategyKind::kClean});
  CHECK(c.synth.split_seeds.at("pretrain/train") == 123);
  REQUIRE(c.backbone.blocks.size() == 2);
  CHECK(c.backbone.blocks[1].stride == 1);

  const ExperimentPlan p = make_plan(c, 77);
  CHECK(p.master_seed == 77);
  CHECK(p.pretrain.epochs == 4);
  CHECK(p.finetune.learning_rate == 3e-3);
}

TEST_CASE("canonical JSON round trips") {
  Config c = default_config();
  c.pretrain.epochs = 7;
  c.strategy.clean_fraction = 0.25;
  c.synth.split_seeds["finetune/test"] = 9;
  c.plan.pretrain_strategies = {StrategyKind::kMixup};
  const std::string text = config_to_json(c);
  CHECK(config_to_json(parse_config(text)) == text);
}

TEST_CASE("unknown keys are named with their path") {
  CHECK(config_error(R"({"pretrian": {}})").find("'pretrian'") != std::string::npos);
  CHECK(config_error(R"({"pretrain": {"epoch": 3}})").find("'pretrain.epoch'") !=
        std::string::npos);
  CHECK(config_error(R"({"synth": {"split_seeds": {"train": 1}}})")
            .find("'synth.split_seeds.train'") != std::string::npos);
}

TEST_CASE("wrong types and out-of-range values are rejected") {
  CHECK(config_error(R"({"pretrain": {"epochs": "ten"}})").find("'pretrain.epochs'") !=
        std::string::npos);
  CHECK(config_error(R"({"pretrain": {"epochs": 2.5}})").find("'pretrain.epochs'") !=
        std::string::npos);
  CHECK(config_error(R"({"finetune": {"learning_rate": 0}})").find("learning_rate") !=
        std::string::npos);
  CHECK(config_error(R"({"strategy": {"clean_fraction": 1.5}})").find("clean_fraction") !=
        std::string::npos);
  CHECK(config_error(R"({"features": {"high_hz": 9000}})").find("high_hz") != std::string::npos);
  CHECK(config_error(R"({"backbone": {"channels": [8], "strides": [2, 2]}})").find("strides") !=
        std::string::npos);
  CHECK(config_error(R"({"plan": {"finetune_strategies": ["mt", "mt"]}})").find("'plan'") !=
        std::string::npos);
  CHECK(config_error(R"({"plan": {"pretrain_strategies": ["cutmix"]}})").find("cutmix") !=
        std::string::npos);
  CHECK(config_error(R"({"synth": {"finetune_keywords": 2}})").find("finetune_keywords") !=
        std::string::npos);
  CHECK(config_error(R"({"dataset": {"cap": 2}})").find("cap") != std::string::npos);
  CHECK(config_error("{").find("not valid JSON") != std::string::npos);
  CHECK(config_error("[]").find("object") != std::string::npos);
}

TEST_CASE("loading a file names it in errors") {
  const auto path = std::filesystem::temp_directory_path() / "mixkws_config_test.json";
  {
    std::ofstream out(path);
    out << R"({"repeats": 3})";
  }
  try {
    load_config(path.string());
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(path.string()) != std::string::npos);
  }
  {
    std::ofstream out(path);
    out << R"({"plan": {"repeats": 3}})";
  }
  CHECK(load_config(path.string()).plan.repeats == 3);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_config(path.string()), Error);
}
