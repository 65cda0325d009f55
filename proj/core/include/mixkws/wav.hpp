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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixkws/signal.hpp"

namespace mixkws {

// 16-bit PCM mono RIFF/WAVE, little-endian. Samples are quantized as
// round(x * 32768) clamped to the int16 range, and decoded as q / 32768, so a
// round trip is exact for zeros and within 2^-15 elsewhere.
std::vector<std::uint8_t> encode_wav(const Waveform& x);

// Throws Error(kFormat) on a malformed header, an encoding other than 16-bit
// PCM, or a channel count other than one. When expected_rate is set the header
// rate must match it.
Waveform decode_wav(std::span<const std::uint8_t> bytes,
                    std::optional<int> expected_rate = std::nullopt);

Waveform load_wav(const std::string& path, std::optional<int> expected_rate = std::nullopt);
void save_wav(const std::string& path, const Waveform& x);

}  // namespace mixkws
