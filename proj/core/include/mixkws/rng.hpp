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
#include <cstdint>
#include <initializer_list>
#include <random>

namespace mixkws {

// Mixes a master seed with a path of integers into an independent child seed
// (splitmix64 finalizer per step). Every random stream in the toolkit is
// derived this way so that results depend only on the seed path, never on
// thread scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

class Rng {
 public:
  using Engine = std::mt19937_64;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  double gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(engine_); }
  // Beta(a, b) via the ratio of two gamma variates.
  double beta(double a, double b);
  // Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  std::uint64_t next() { return engine_(); }

  Engine& engine() { return engine_; }

 private:
  Engine engine_;
};

}  // namespace mixkws
