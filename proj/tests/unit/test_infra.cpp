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

#include <doctest.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "mixkws/error.hpp"
#include "mixkws/hash.hpp"
#include "mixkws/parallel.hpp"
#include "mixkws/rng.hpp"

using namespace mixkws;

TEST_CASE("fnv1a64 matches published test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("incremental hashing equals one-shot hashing") {
  Fnv1a64 h;
  h.update(std::string_view("foo")).update(std::string_view("bar"));
  CHECK(h.digest() == fnv1a64("foobar"));
}

TEST_CASE("hash_file hashes the file bytes") {
  const auto path = std::filesystem::temp_directory_path() / "mixkws_hash_test.bin";
  {
    std::ofstream out(path, std::ios::binary);
    out << "foobar";
  }
  CHECK(hash_file(path.string()) == fnv1a64("foobar"));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(hash_file(path.string()), Error);
}

TEST_CASE("derive_seed depends on the whole path") {
  const auto a = derive_seed(1, {2, 3});
  CHECK(a == derive_seed(1, {2, 3}));
  CHECK(a != derive_seed(1, {3, 2}));
  CHECK(a != derive_seed(2, {2, 3}));
  CHECK(a != derive_seed(1, {2}));
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 10000; ++i) seen.insert(derive_seed(42, {i}));
  CHECK(seen.size() == 10000);
}

TEST_CASE("Rng streams are reproducible") {
  Rng a(9), b(9);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  Rng c(5);
  for (int i = 0; i < 1000; ++i) {
    const auto k = c.index(7);
    CHECK(k < 7);
    const double u = c.uniform(0.25, 0.5);
    CHECK(u >= 0.25);
    CHECK(u < 0.5);
  }
}

TEST_CASE("beta draws stay in the unit interval") {
  Rng rng(3);
  for (int i = 0; i < 20000; ++i) {
    const double x = rng.beta(0.2, 0.2);
    CHECK(x >= 0.0);
    CHECK(x <= 1.0);
  }
}

TEST_CASE("parallel_for visits every index once") {
  for (int workers : {1, 3, 8}) {
    std::vector<std::atomic<int>> hits(101);
    parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) CHECK(h.load() == 1);
  }
  parallel_for(0, 4, [](std::size_t) { FAIL("no work expected"); });
}

TEST_CASE("parallel_for rethrows worker exceptions") {
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](std::size_t i) {
                                 if (i == 7) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}

TEST_CASE("errors carry their kind") {
  try {
    fail(ErrorKind::kFormat, "bad");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kFormat);
    CHECK(std::string(e.what()) == "bad");
  }
  CHECK(error_kind_name(ErrorKind::kConfig) == "config_error");
  CHECK_NOTHROW(require(true, ErrorKind::kIo, "unused"));
  CHECK_THROWS_AS(require(false, ErrorKind::kIo, "x"), Error);
}
