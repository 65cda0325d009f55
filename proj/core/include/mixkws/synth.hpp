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

#include "mixkws/signal.hpp"

namespace mixkws {

// Fixed parameterization of the synthetic keyword generator.
struct SynthParams {
  double base_hz = 300.0;          // fundamental of keyword 0
  double hz_per_keyword = 80.0;    // fundamental spacing between keyword ids
  double harmonic_ratios[3] = {1.0, 2.0, 3.0};
  double component_gains[3] = {1.0, 0.6, 0.4};
  double freq_jitter = 0.03;       // relative, uniform
  double amp_jitter = 0.20;        // relative, uniform
  double snr_db = 20.0;
  double active_fraction = 0.6;    // envelope length relative to duration
  double onset_jitter = 0.05;      // envelope centre shift, fraction of duration
  double nominal_peak = 0.5;
  double max_peak = 0.9;
};

// Deterministic "spoken keyword" stand-in: three enveloped sinusoids at
// keyword-specific frequencies with variant-seeded jitter and white noise.
// Identical (keyword_id, variant_seed) pairs give bit-identical output.
Waveform synth_keyword(int keyword_id, std::uint64_t variant_seed, double duration_s,
                       int sample_rate_hz = kDefaultSampleRate,
                       const SynthParams& params = {});

}  // namespace mixkws
