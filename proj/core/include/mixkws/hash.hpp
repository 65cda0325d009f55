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
#include <string_view>

namespace mixkws {

// 64-bit FNV-1a. Used for content hashes of checkpoints and input files and
// for deriving stable per-cell seeds from string keys.
class Fnv1a64 {
 public:
  Fnv1a64& update(std::span<const std::uint8_t> bytes);
  Fnv1a64& update(std::string_view text);
  Fnv1a64& update_u64(std::uint64_t value);
  Fnv1a64& update_f64(double value);
  std::uint64_t digest() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::uint64_t fnv1a64(std::string_view text);
std::string hex64(std::uint64_t value);

// Hash of a file's bytes; throws Error(kIo) when unreadable.
std::uint64_t hash_file(const std::string& path);

}  // namespace mixkws
