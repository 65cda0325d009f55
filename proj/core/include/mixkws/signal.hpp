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

#include <cstddef>
#include <vector>

#include "mixkws/rng.hpp"

namespace mixkws {

inline constexpr int kDefaultSampleRate = 16000;

// Mono audio with samples in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = kDefaultSampleRate;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  double duration_s() const noexcept {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }

  friend bool operator==(const Waveform&, const Waveform&) = default;
};

// Throws Error(kInvalidArgument) if the waveform is empty, has a non-positive
// rate, or holds a sample outside [-1, 1].
void validate_waveform(const Waveform& x);

// Convex source weights for a two-way mixture.
struct MixWeights {
  double w1 = 0.5;
  double w2 = 0.5;

  friend bool operator==(const MixWeights&, const MixWeights&) = default;
};

// Bounds of the uniform draws behind mix-training weights.
inline constexpr double kMixWeightLow = 0.1;
inline constexpr double kMixWeightHigh = 0.9;

// Rescales two raw draws so that they sum to one.
MixWeights normalize_weights(double u1, double u2);

// out[t] = w1 * a[t] + w2 * b[t]. The shorter input is zero-padded at the end.
// Weights must be non-negative and sum to one, so no clipping can occur.
Waveform mix_waveforms(const Waveform& a, const Waveform& b, MixWeights w);

// Two independent Uniform(0.1, 0.9) draws, normalized to sum to one.
MixWeights sample_mt_weights(Rng& rng);

}  // namespace mixkws
