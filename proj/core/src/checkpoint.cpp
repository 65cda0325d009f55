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

#include "mixkws/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mixkws/error.hpp"
#include "mixkws/hash.hpp"

namespace mixkws {

namespace {

constexpr char kMagic[8] = {'M', 'I', 'X', 'K', 'W', 'S', 'C', 'K'};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void vec(const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
  }
  std::vector<std::uint8_t>& bytes() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  Vector vec(std::size_t n) {
    need(n * 8);
    Vector v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = f64();
    return v;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    require(pos_ + n <= bytes_.size(), ErrorKind::kFormat, "checkpoint truncated");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ModelState& s, const std::string& config_echo) {
  validate_state(s);
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kCheckpointVersion);

  w.u32(static_cast<std::uint32_t>(s.config.input_dim));
  w.u32(static_cast<std::uint32_t>(s.config.embedding_dim));
  w.u32(static_cast<std::uint32_t>(s.config.blocks.size()));
  for (const auto& b : s.config.blocks) {
    w.u32(static_cast<std::uint32_t>(b.out_channels));
    w.u32(static_cast<std::uint32_t>(b.stride));
  }
  w.u32(s.head_kind == HeadKind::kLinear ? 0 : 1);
  w.u32(static_cast<std::uint32_t>(s.num_keywords));
  w.u32(static_cast<std::uint32_t>(s.head_hidden));

  w.u32(static_cast<std::uint32_t>(s.blocks.size()));
  for (const auto& b : s.blocks) {
    w.str(b.name);
    w.u32(static_cast<std::uint32_t>(b.shape.size()));
    for (int d : b.shape) w.u32(static_cast<std::uint32_t>(d));
    w.u64(b.offset);
    w.u64(b.size);
    w.u8(b.backbone ? 1 : 0);
    w.u8(b.frozen ? 1 : 0);
  }

  w.u64(s.num_params());
  w.vec(s.params);
  w.vec(s.adam_m);
  w.vec(s.adam_v);
  w.u64(s.adam_step);

  w.u32(static_cast<std::uint32_t>(s.feature_stats.mean.size()));
  for (double v : s.feature_stats.mean) w.f64(v);
  for (double v : s.feature_stats.stddev) w.f64(v);

  w.str(config_echo);

  auto& bytes = w.bytes();
  const std::uint64_t digest = Fnv1a64().update(bytes).digest();
  w.u64(digest);
  return std::move(bytes);
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= sizeof(kMagic) + 12, ErrorKind::kFormat, "checkpoint too short");
  require(std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) == 0, ErrorKind::kFormat,
          "not a mixkws checkpoint (bad magic)");
  const auto body = bytes.first(bytes.size() - 8);
  Reader tail(bytes.last(8));
  require(Fnv1a64().update(body).digest() == tail.u64(), ErrorKind::kFormat,
          "checkpoint content hash mismatch");

  Reader r(body);
  for (std::size_t i = 0; i < sizeof(kMagic); ++i) r.u8();
  const std::uint32_t version = r.u32();
  require(version == kCheckpointVersion, ErrorKind::kFormat,
          "unsupported checkpoint version " + std::to_string(version));

  Checkpoint ck;
  ModelState& s = ck.state;
  s.config.input_dim = static_cast<int>(r.u32());
  s.config.embedding_dim = static_cast<int>(r.u32());
  s.config.blocks.resize(r.u32());
  for (auto& b : s.config.blocks) {
    b.out_channels = static_cast<int>(r.u32());
    b.stride = static_cast<int>(r.u32());
  }
  s.head_kind = r.u32() == 0 ? HeadKind::kLinear : HeadKind::kTwoLayer;
  s.num_keywords = static_cast<int>(r.u32());
  s.head_hidden = static_cast<int>(r.u32());

  s.blocks.resize(r.u32());
  for (auto& b : s.blocks) {
    b.name = r.str();
    b.shape.resize(r.u32());
    for (int& d : b.shape) d = static_cast<int>(r.u32());
    b.offset = r.u64();
    b.size = r.u64();
    b.backbone = r.u8() != 0;
    b.frozen = r.u8() != 0;
  }

  const std::uint64_t n = r.u64();
  s.params = r.vec(n);
  s.adam_m = r.vec(n);
  s.adam_v = r.vec(n);
  s.adam_step = r.u64();

  const std::uint32_t dim = r.u32();
  s.feature_stats.mean.resize(dim);
  s.feature_stats.stddev.resize(dim);
  for (double& v : s.feature_stats.mean) v = r.f64();
  for (double& v : s.feature_stats.stddev) v = r.f64();

  ck.config_echo = r.str();
  require(r.pos() == body.size(), ErrorKind::kFormat, "trailing bytes in checkpoint");
  validate_state(s);
  mark_modified(s);
  return ck;
}

void save_checkpoint(const std::string& path, const ModelState& state,
                     const std::string& config_echo) {
  const auto bytes = encode_checkpoint(state, config_echo);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorKind::kIo, "write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_checkpoint(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

}  // namespace mixkws
