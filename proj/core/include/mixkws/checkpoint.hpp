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
#include <span>
#include <string>
#include <vector>

#include "mixkws/model.hpp"

namespace mixkws {

// Binary checkpoint container, little-endian. Layout is documented in
// docs/checkpoint_format.md; decode(encode(x)) reproduces every field
// bit-for-bit and the trailing FNV-1a hash guards against corruption.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelState state;
  std::string config_echo;  // free-form text, normally the JSON run config
};

std::vector<std::uint8_t> encode_checkpoint(const ModelState& state,
                                            const std::string& config_echo = {});
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::string& path, const ModelState& state,
                     const std::string& config_echo = {});
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mixkws
