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

#include "mixkws/features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include <fftw3.h>

#include "mixkws/error.hpp"

namespace mixkws {

namespace {

// FFTW plans are created once per size; planning is not thread-safe but
// executing a plan on caller-owned buffers is.
class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    std::vector<double> in(static_cast<std::size_t>(n));
    std::vector<std::complex<double>> out(static_cast<std::size_t>(n / 2 + 1));
    plan_ = fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
    require(plan_ != nullptr, ErrorKind::kNumeric, "FFTW planning failed");
  }
  ~RealFft() { fftw_destroy_plan(plan_); }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  void forward(std::vector<double>& in, std::vector<std::complex<double>>& out) const {
    fftw_execute_dft_r2c(plan_, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
  }
  int size() const { return n_; }

 private:
  int n_;
  fftw_plan plan_;
};

const RealFft& fft_for(int n) {
  static std::mutex mutex;
  static std::vector<std::unique_ptr<RealFft>> plans;
  std::lock_guard lock(mutex);
  for (const auto& p : plans) {
    if (p->size() == n) return *p;
  }
  plans.push_back(std::make_unique<RealFft>(n));
  return *plans.back();
}

const MelFilterbank& filterbank_for(const FbankOptions& opts) {
  struct Entry {
    FbankOptions opts;
    std::unique_ptr<MelFilterbank> bank;
  };
  static std::mutex mutex;
  static std::vector<Entry> cache;
  std::lock_guard lock(mutex);
  for (const auto& e : cache) {
    const auto& o = e.opts;
    if (o.sample_rate_hz == opts.sample_rate_hz && o.fft_size == opts.fft_size &&
        o.num_bins == opts.num_bins && o.low_hz == opts.low_hz && o.high_hz == opts.high_hz) {
      return *e.bank;
    }
  }
  cache.push_back({opts, std::make_unique<MelFilterbank>(opts)});
  return *cache.back().bank;
}

}  // namespace

int FbankOptions::window_samples() const {
  return static_cast<int>(std::lround(sample_rate_hz * frame_length_ms / 1000.0));
}

int FbankOptions::hop_samples() const {
  return static_cast<int>(std::lround(sample_rate_hz * frame_shift_ms / 1000.0));
}

double hz_to_mel(double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::exp(mel / 1127.0) - 1.0); }

MelFilterbank::MelFilterbank(const FbankOptions& opts) {
  require(opts.num_bins > 0 && opts.fft_size > 0, ErrorKind::kInvalidArgument,
          "filterbank needs positive bin count and FFT size");
  require(opts.low_hz >= 0.0 && opts.high_hz > opts.low_hz &&
              opts.high_hz <= 0.5 * opts.sample_rate_hz,
          ErrorKind::kInvalidArgument, "mel band edges must satisfy 0 <= low < high <= nyquist");
  const int num_fft_bins = opts.fft_size / 2 + 1;
  const double bin_hz = static_cast<double>(opts.sample_rate_hz) / opts.fft_size;
  const double mel_low = hz_to_mel(opts.low_hz);
  const double mel_high = hz_to_mel(opts.high_hz);
  const double delta = (mel_high - mel_low) / (opts.num_bins + 1);

  weights_ = Matrix::Zero(opts.num_bins, num_fft_bins);
  centers_hz_.resize(static_cast<std::size_t>(opts.num_bins));
  for (int m = 0; m < opts.num_bins; ++m) {
    const double left = mel_low + m * delta;
    const double center = left + delta;
    const double right = center + delta;
    centers_hz_[static_cast<std::size_t>(m)] = mel_to_hz(center);
    for (int k = 0; k < num_fft_bins; ++k) {
      const double mel = hz_to_mel(k * bin_hz);
      if (mel <= left || mel >= right) continue;
      weights_(m, k) = mel <= center ? (mel - left) / delta : (right - mel) / delta;
    }
  }
}

std::size_t num_frames(std::size_t num_samples, const FbankOptions& opts) {
  const auto window = static_cast<std::size_t>(opts.window_samples());
  const auto hop = static_cast<std::size_t>(opts.hop_samples());
  if (num_samples < window) return 0;
  return (num_samples - window) / hop + 1;
}

FeatureMatrix fbank(const Waveform& x, const FbankOptions& opts) {
  require(x.sample_rate_hz == opts.sample_rate_hz, ErrorKind::kInvalidArgument,
          "fbank expects " + std::to_string(opts.sample_rate_hz) + " Hz input, got " +
              std::to_string(x.sample_rate_hz) + " Hz");
  const int window = opts.window_samples();
  const int hop = opts.hop_samples();
  require(window <= opts.fft_size, ErrorKind::kInvalidArgument,
          "FFT size smaller than the analysis window");
  const std::size_t frames = num_frames(x.size(), opts);
  require(frames > 0, ErrorKind::kInvalidArgument,
          "input of " + std::to_string(x.size()) + " samples is shorter than one " +
              std::to_string(window) + "-sample window");

  const RealFft& fft = fft_for(opts.fft_size);
  const MelFilterbank& bank = filterbank_for(opts);
  const int num_fft_bins = opts.fft_size / 2 + 1;

  std::vector<double> hann(static_cast<std::size_t>(window));
  for (int n = 0; n < window; ++n) {
    hann[static_cast<std::size_t>(n)] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / (window - 1));
  }

  std::vector<double> buf(static_cast<std::size_t>(opts.fft_size));
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(num_fft_bins));
  Vector power(num_fft_bins);

  FeatureMatrix out;
  out.frames.resize(static_cast<Eigen::Index>(frames), opts.num_bins);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t start = f * static_cast<std::size_t>(hop);
    std::fill(buf.begin(), buf.end(), 0.0);
    for (int n = 0; n < window; ++n) {
      const auto i = static_cast<std::size_t>(n);
      buf[i] = x.samples[start + i] * hann[i];
    }
    fft.forward(buf, spec);
    for (int k = 0; k < num_fft_bins; ++k) power[k] = std::norm(spec[static_cast<std::size_t>(k)]);
    const Vector energies = bank.weights() * power;
    for (int m = 0; m < opts.num_bins; ++m) {
      out.frames(static_cast<Eigen::Index>(f), m) = std::log(std::max(energies[m], opts.log_floor));
    }
  }
  return out;
}

FeatureStats compute_feature_stats(std::span<const FeatureMatrix> features, double std_floor) {
  require(!features.empty(), ErrorKind::kInvalidArgument, "no features to compute stats from");
  const Eigen::Index dim = features.front().dim();
  Vector sum = Vector::Zero(dim);
  double count = 0.0;
  for (const auto& f : features) {
    require(f.dim() == dim, ErrorKind::kShape, "feature dimension mismatch in stats");
    sum += f.frames.colwise().sum().transpose();
    count += static_cast<double>(f.num_frames());
  }
  require(count > 0, ErrorKind::kInvalidArgument, "no frames to compute stats from");
  const Vector mean = sum / count;
  Vector sum_sq = Vector::Zero(dim);
  for (const auto& f : features) {
    sum_sq += (f.frames.rowwise() - mean.transpose()).cwiseAbs2().colwise().sum().transpose();
  }
  FeatureStats stats;
  stats.mean.resize(static_cast<std::size_t>(dim));
  stats.stddev.resize(static_cast<std::size_t>(dim));
  for (Eigen::Index d = 0; d < dim; ++d) {
    stats.mean[static_cast<std::size_t>(d)] = mean[d];
    stats.stddev[static_cast<std::size_t>(d)] = std::max(std::sqrt(sum_sq[d] / count), std_floor);
  }
  return stats;
}

FeatureMatrix mean_var_normalize(const FeatureMatrix& f, const FeatureStats& stats) {
  const auto dim = static_cast<std::size_t>(f.dim());
  require(stats.mean.size() == dim && stats.stddev.size() == dim, ErrorKind::kShape,
          "normalization stats have dimension " + std::to_string(stats.mean.size()) +
              ", features have " + std::to_string(dim));
  for (std::size_t d = 0; d < dim; ++d) {
    require(stats.stddev[d] > 0.0, ErrorKind::kInvalidArgument,
            "zero stddev in normalization stats at dimension " + std::to_string(d));
  }
  FeatureMatrix out;
  out.frames.resize(f.frames.rows(), f.frames.cols());
  for (Eigen::Index t = 0; t < f.num_frames(); ++t) {
    for (Eigen::Index d = 0; d < f.dim(); ++d) {
      const auto i = static_cast<std::size_t>(d);
      out.frames(t, d) = (f.frames(t, d) - stats.mean[i]) / stats.stddev[i];
    }
  }
  return out;
}

}  // namespace mixkws
