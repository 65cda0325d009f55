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

#include "mixkws/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mixkws/error.hpp"

namespace mixkws {

namespace {

constexpr double kPcmScale = 32768.0;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  bool has(std::size_t n) const { return pos_ + n <= bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t pos() const { return pos_; }

  std::uint16_t u16() {
    need(2);
    const std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string tag() {
    need(4);
    std::string t(reinterpret_cast<const char*>(bytes_.data() + pos_), 4);
    pos_ += 4;
    return t;
  }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }

 private:
  void need(std::size_t n) const {
    require(has(n), ErrorKind::kFormat, "malformed WAV header: truncated file");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_wav(const Waveform& x) {
  validate_waveform(x);
  const auto data_bytes = static_cast<std::uint32_t>(x.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(x.sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(x.sample_rate_hz) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (double s : x.samples) {
    const double q = std::clamp(std::round(s * kPcmScale), -32768.0, 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  return out;
}

Waveform decode_wav(std::span<const std::uint8_t> bytes, std::optional<int> expected_rate) {
  Reader r(bytes);
  require(r.has(12), ErrorKind::kFormat, "malformed WAV header: file too short");
  require(r.tag() == "RIFF", ErrorKind::kFormat, "malformed WAV header: missing RIFF tag");
  r.u32();
  require(r.tag() == "WAVE", ErrorKind::kFormat, "malformed WAV header: missing WAVE tag");

  bool have_fmt = false;
  int rate = 0;
  while (r.has(8)) {
    const std::string id = r.tag();
    const std::uint32_t size = r.u32();
    if (id == "fmt ") {
      require(size >= 16, ErrorKind::kFormat, "malformed WAV header: short fmt chunk");
      const std::uint16_t format = r.u16();
      const std::uint16_t channels = r.u16();
      rate = static_cast<int>(r.u32());
      r.u32();  // byte rate
      r.u16();  // block align
      const std::uint16_t bits = r.u16();
      r.skip(size - 16 + (size & 1));
      require(format == 1, ErrorKind::kFormat,
              "unsupported encoding: format tag " + std::to_string(format) + " (need PCM)");
      require(channels == 1, ErrorKind::kFormat,
              "unsupported channel count: " + std::to_string(channels));
      require(bits == 16, ErrorKind::kFormat,
              "unsupported encoding: " + std::to_string(bits) + " bits per sample");
      require(rate > 0, ErrorKind::kFormat, "malformed WAV header: zero sample rate");
      have_fmt = true;
    } else if (id == "data") {
      require(have_fmt, ErrorKind::kFormat, "malformed WAV header: data before fmt chunk");
      require(size % 2 == 0 && r.has(size), ErrorKind::kFormat,
              "malformed WAV header: data chunk size " + std::to_string(size));
      if (expected_rate) {
        require(rate == *expected_rate, ErrorKind::kFormat,
                "sample rate " + std::to_string(rate) + " Hz does not match configured " +
                    std::to_string(*expected_rate) + " Hz");
      }
      Waveform x;
      x.sample_rate_hz = rate;
      x.samples.resize(size / 2);
      for (auto& s : x.samples) {
        s = static_cast<std::int16_t>(r.u16()) / kPcmScale;
      }
      require(!x.empty(), ErrorKind::kFormat, "WAV file has no samples");
      return x;
    } else {
      r.skip(std::min<std::size_t>(size + (size & 1), r.remaining()));
    }
  }
  fail(ErrorKind::kFormat, have_fmt ? "malformed WAV: missing data chunk"
                                    : "malformed WAV header: missing fmt chunk");
}

Waveform load_wav(const std::string& path, std::optional<int> expected_rate) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_wav(bytes, expected_rate);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

void save_wav(const std::string& path, const Waveform& x) {
  const auto bytes = encode_wav(x);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorKind::kIo, "write failed for " + path);
}

}  // namespace mixkws
