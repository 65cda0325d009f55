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

#include "mixkws/signal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mixkws/error.hpp"

namespace mixkws {

void validate_waveform(const Waveform& x) {
  require(!x.empty(), ErrorKind::kInvalidArgument, "empty waveform");
  require(x.sample_rate_hz > 0, ErrorKind::kInvalidArgument,
          "sample rate must be positive, got " + std::to_string(x.sample_rate_hz));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double s = x.samples[i];
    if (!(std::abs(s) <= 1.0)) {
      fail(ErrorKind::kInvalidArgument,
           "sample " + std::to_string(i) + " out of range: " + std::to_string(s));
    }
  }
}

MixWeights normalize_weights(double u1, double u2) {
  require(u1 >= 0.0 && u2 >= 0.0 && u1 + u2 > 0.0, ErrorKind::kInvalidArgument,
          "mix weights must be non-negative with a positive sum");
  const double total = u1 + u2;
  return {u1 / total, u2 / total};
}

Waveform mix_waveforms(const Waveform& a, const Waveform& b, MixWeights w) {
  require(!a.empty() && !b.empty(), ErrorKind::kInvalidArgument,
          "cannot mix an empty waveform");
  require(a.sample_rate_hz == b.sample_rate_hz, ErrorKind::kInvalidArgument,
          "sample-rate mismatch: " + std::to_string(a.sample_rate_hz) + " Hz vs " +
              std::to_string(b.sample_rate_hz) + " Hz");
  require(w.w1 >= 0.0 && w.w2 >= 0.0 && std::abs(w.w1 + w.w2 - 1.0) <= 1e-9,
          ErrorKind::kInvalidArgument,
          "mix weights must be non-negative and sum to 1, got (" + std::to_string(w.w1) +
              ", " + std::to_string(w.w2) + ")");

  Waveform out;
  out.sample_rate_hz = a.sample_rate_hz;
  out.samples.resize(std::max(a.size(), b.size()));
  for (std::size_t t = 0; t < out.size(); ++t) {
    const double sa = t < a.size() ? a.samples[t] : 0.0;
    const double sb = t < b.size() ? b.samples[t] : 0.0;
    out.samples[t] = w.w1 * sa + w.w2 * sb;
  }
  return out;
}

MixWeights sample_mt_weights(Rng& rng) {
  const double u1 = rng.uniform(kMixWeightLow, kMixWeightHigh);
  const double u2 = rng.uniform(kMixWeightLow, kMixWeightHigh);
  return normalize_weights(u1, u2);
}

}  // namespace mixkws
