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
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mixkws/signal.hpp"

namespace mixkws {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline constexpr int kNumMelBins = 80;

struct FbankOptions {
  int sample_rate_hz = kDefaultSampleRate;
  double frame_length_ms = 25.0;
  double frame_shift_ms = 10.0;
  int fft_size = 512;
  int num_bins = kNumMelBins;
  double low_hz = 20.0;
  double high_hz = 7600.0;
  double log_floor = 1e-10;

  int window_samples() const;
  int hop_samples() const;
};

// T x 80 log-mel energies, one row per 25 ms frame at a 10 ms hop.
struct FeatureMatrix {
  Matrix frames;

  Eigen::Index num_frames() const { return frames.rows(); }
  Eigen::Index dim() const { return frames.cols(); }
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular filters equally spaced on the mel scale, evaluated at the DFT
// bin frequencies. weights() is num_bins x (fft_size / 2 + 1).
class MelFilterbank {
 public:
  explicit MelFilterbank(const FbankOptions& opts = {});

  const Matrix& weights() const { return weights_; }
  double center_hz(int bin) const { return centers_hz_[static_cast<std::size_t>(bin)]; }
  int num_bins() const { return static_cast<int>(centers_hz_.size()); }

 private:
  Matrix weights_;
  std::vector<double> centers_hz_;
};

// Number of frames for a signal of num_samples (0 if shorter than a window).
std::size_t num_frames(std::size_t num_samples, const FbankOptions& opts = {});

// Hann window, zero-padded real DFT, mel pooling of the power spectrum and
// natural log with a floor. Throws Error(kInvalidArgument) if the input is
// shorter than one window or its rate differs from opts.sample_rate_hz.
FeatureMatrix fbank(const Waveform& x, const FbankOptions& opts = {});

// Per-dimension normalization statistics.
struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> stddev;

  bool empty() const { return mean.empty(); }
  friend bool operator==(const FeatureStats&, const FeatureStats&) = default;
};

// Mean and population stddev over all frames of all inputs; stddev is floored
// at std_floor so constant dimensions stay finite after normalization.
FeatureStats compute_feature_stats(std::span<const FeatureMatrix> features,
                                   double std_floor = 1e-5);

// (f - mean) / stddev per dimension. Rejects non-positive stddev entries and
// dimension mismatches.
FeatureMatrix mean_var_normalize(const FeatureMatrix& f, const FeatureStats& stats);

}  // namespace mixkws
