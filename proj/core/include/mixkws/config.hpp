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

#include <string>
#include <string_view>

#include "mixkws/corpus.hpp"
#include "mixkws/data.hpp"
#include "mixkws/features.hpp"
#include "mixkws/fewshot.hpp"
#include "mixkws/model.hpp"
#include "mixkws/strategy.hpp"
#include "mixkws/trainer.hpp"

namespace mixkws {

// Options of the build-dataset pipeline.
struct DatasetConfig {
  KeywordSelectionOptions selection;
  double excerpt_s = 1.0;
  int valid_per_keyword = 1;
  int test_per_keyword = 1;
  std::size_t mixed_trials = 500;
};

// Every tunable of a run. The seed is not part of the config; it comes from
// the command line only.
struct Config {
  int sample_rate_hz = kDefaultSampleRate;
  FbankOptions features;
  BackboneConfig backbone;
  StrategyConfig strategy;
  TrainOptions pretrain = ExperimentPlan::with_epochs(30);
  TrainOptions finetune = ExperimentPlan::with_epochs(50);
  SynthCorpusConfig synth;
  DatasetConfig dataset;
  ExperimentPlan plan;  // strategy lists, shots, repeats
};

// Defaults with the fine-tuning learning rate raised to 3e-3.
Config default_config();

// JSON with // and /* */ comments. Missing keys keep their defaults; unknown
// keys, wrong types and out-of-range values throw Error(kConfig) naming the
// offending key path.
Config parse_config(std::string_view text);
Config load_config(const std::string& path);

// Canonical JSON of every field, including defaults. Parsing it gives back
// an equal config.
std::string config_to_json(const Config& config);

// The plan run_plan executes for this config and seed.
ExperimentPlan make_plan(const Config& config, std::uint64_t seed);

}  // namespace mixkws
