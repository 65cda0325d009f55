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

#include "mixkws/hash.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <vector>

#include "mixkws/error.hpp"

namespace mixkws {

namespace {
constexpr std::uint64_t kPrime = 0x100000001b3ULL;
}

Fnv1a64& Fnv1a64::update(std::span<const std::uint8_t> bytes) {
  for (std::uint8_t b : bytes) {
    state_ ^= b;
    state_ *= kPrime;
  }
  return *this;
}

Fnv1a64& Fnv1a64::update(std::string_view text) {
  return update(std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                          text.size()));
}

Fnv1a64& Fnv1a64::update_u64(std::uint64_t value) {
  std::uint8_t bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<std::uint8_t>(value >> (8 * i));
  return update(std::span<const std::uint8_t>(bytes, 8));
}

Fnv1a64& Fnv1a64::update_f64(double value) {
  return update_u64(std::bit_cast<std::uint64_t>(value));
}

std::uint64_t fnv1a64(std::string_view text) {
  return Fnv1a64().update(text).digest();
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot open " + path);
  Fnv1a64 h;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto n = static_cast<std::size_t>(in.gcount());
    h.update(std::span(reinterpret_cast<const std::uint8_t*>(buf.data()), n));
  }
  return h.digest();
}

}  // namespace mixkws
