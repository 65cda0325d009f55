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

#include "mixkws/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mixkws/error.hpp"
#include "mixkws/rng.hpp"

namespace mixkws {

Waveform synth_keyword(int keyword_id, std::uint64_t variant_seed, double duration_s,
                       int sample_rate_hz, const SynthParams& p) {
  require(keyword_id >= 0, ErrorKind::kInvalidArgument, "keyword id must be non-negative");
  require(duration_s > 0.0, ErrorKind::kInvalidArgument, "duration must be positive");
  require(sample_rate_hz > 0, ErrorKind::kInvalidArgument, "sample rate must be positive");

  Rng rng(derive_seed(variant_seed, {static_cast<std::uint64_t>(keyword_id), 0x53594e54}));
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
  require(n > 0, ErrorKind::kInvalidArgument, "duration shorter than one sample");

  const double f0 = p.base_hz + p.hz_per_keyword * keyword_id;
  double freq[3], amp[3], phase[3];
  for (int k = 0; k < 3; ++k) {
    freq[k] = f0 * p.harmonic_ratios[k] * (1.0 + rng.uniform(-p.freq_jitter, p.freq_jitter));
    amp[k] = p.component_gains[k] * (1.0 + rng.uniform(-p.amp_jitter, p.amp_jitter));
    phase[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  const double gain = p.nominal_peak * (1.0 + rng.uniform(-p.amp_jitter, p.amp_jitter));
  const double centre = 0.5 + rng.uniform(-p.onset_jitter, p.onset_jitter);
  const double half = 0.5 * p.active_fraction;

  Waveform x;
  x.sample_rate_hz = sample_rate_hz;
  x.samples.assign(n, 0.0);
  const double nyquist = 0.5 * sample_rate_hz;
  double peak = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double time = static_cast<double>(t) / sample_rate_hz;
    const double rel = (time / duration_s - (centre - half)) / p.active_fraction;
    if (rel <= 0.0 || rel >= 1.0) continue;
    const double env = std::pow(std::sin(std::numbers::pi * rel), 2);
    double s = 0.0;
    for (int k = 0; k < 3; ++k) {
      if (freq[k] >= nyquist) continue;
      s += amp[k] * std::sin(2.0 * std::numbers::pi * freq[k] * time + phase[k]);
    }
    x.samples[t] = env * s;
    peak = std::max(peak, std::abs(x.samples[t]));
  }

  double power = 0.0;
  if (peak > 0.0) {
    for (auto& s : x.samples) {
      s *= gain / peak;
      power += s * s;
    }
    power /= static_cast<double>(n);
  }
  const double noise_std = std::sqrt(power / std::pow(10.0, p.snr_db / 10.0));
  peak = 0.0;
  for (auto& s : x.samples) {
    s += noise_std * rng.normal();
    peak = std::max(peak, std::abs(s));
  }
  if (peak > p.max_peak) {
    for (auto& s : x.samples) s *= p.max_peak / peak;
  }
  return x;
}

}  // namespace mixkws
