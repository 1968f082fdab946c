// crnn/features.cc

// Copyright 2026  CRNN authors

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

#include "crnn/features.h"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include <fftw3.h>

namespace crnn {

void FeatureSequence::Check() const {
  if (num_bands <= 0 || num_channels <= 0 ||
      frames.cols() != static_cast<Eigen::Index>(num_bands) * num_channels)
    throw FormatError(StrCat("feature dim ", frames.cols(), " != bands ",
                             num_bands, " x channels ", num_channels));
  if (!frames.allFinite())
    throw FormatError("non-finite value in features of " + utterance_id);
}

int32 NumFrames(int64 num_samples, int32 frame_length, int32 frame_shift) {
  if (num_samples < frame_length) return 0;
  return static_cast<int32>((num_samples - frame_length) / frame_shift + 1);
}

Matrix FrameSignal(const WaveUtterance &wave, double frame_length_ms,
                   double frame_shift_ms) {
  if (!(wave.sample_rate > 0))
    throw Error("sample rate must be positive");
  if (!(frame_shift_ms > 0) || frame_length_ms < frame_shift_ms)
    throw Error("need frame_length >= frame_shift > 0");
  const int32 len = static_cast<int32>(std::lround(wave.sample_rate * frame_length_ms / 1000.0));
  const int32 shift = static_cast<int32>(std::lround(wave.sample_rate * frame_shift_ms / 1000.0));
  const int32 num_frames = NumFrames(static_cast<int64>(wave.samples.size()), len, shift);
  if (num_frames == 0)
    throw Error(StrCat("utterance ", wave.utterance_id, " has ", wave.samples.size(),
                       " samples, shorter than one frame of ", len));

  std::vector<double> window(len);
  for (int32 i = 0; i < len; i++)
    window[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (len - 1));

  Matrix frames(num_frames, len);
  for (int32 t = 0; t < num_frames; t++) {
    const double *src = wave.samples.data() + static_cast<int64>(t) * shift;
    for (int32 i = 0; i < len; i++) frames(t, i) = src[i] * window[i];
  }
  return frames;
}

namespace {

int32 NextPowerOfTwo(int32 n) {
  int32 p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Planning is the only non-reentrant part of FFTW.
std::mutex &PlannerMutex() {
  static std::mutex m;
  return m;
}

}  // namespace

Vector PowerSpectrum(std::span<const double> frame) {
  const int32 n = NextPowerOfTwo(static_cast<int32>(frame.size()));
  const int32 num_bins = n / 2 + 1;
  double *in = fftw_alloc_real(n);
  fftw_complex *out = fftw_alloc_complex(num_bins);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  }
  std::fill(in, in + n, 0.0);
  std::copy(frame.begin(), frame.end(), in);
  fftw_execute(plan);
  Vector power(num_bins);
  for (int32 k = 0; k < num_bins; k++)
    power[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
  {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return power;
}

MelBanks::MelBanks(int32 num_mel, double sample_rate, int32 fft_size)
    : num_mel_(num_mel), sample_rate_(sample_rate), fft_size_(fft_size) {
  if (num_mel < 1) throw Error("num_mel must be >= 1");
  if (!(sample_rate > 0) || fft_size < 2) throw Error("bad filterbank geometry");
  const int32 num_bins = fft_size / 2 + 1;
  const double mel_low = MelScale(0.0);
  const double mel_high = MelScale(sample_rate / 2.0);
  const double delta = (mel_high - mel_low) / (num_mel + 1);

  centers_mel_.resize(num_mel);
  weights_ = Matrix::Zero(num_mel, num_bins);
  for (int32 m = 0; m < num_mel; m++) {
    const double left = mel_low + m * delta;
    const double center = left + delta;
    const double right = center + delta;
    centers_mel_[m] = center;
    for (int32 k = 0; k < num_bins; k++) {
      const double mel = MelScale(k * sample_rate / fft_size);
      if (mel > left && mel <= center)
        weights_(m, k) = (mel - left) / (center - left);
      else if (mel > center && mel < right)
        weights_(m, k) = (right - mel) / (right - center);
    }
  }
}

double MelBanks::CenterHz(int32 m) const { return InverseMelScale(centers_mel_.at(m)); }

Vector MelBanks::Compute(const Vector &power_spectrum) const {
  CRNN_CHECK_DIM(power_spectrum.size() == weights_.cols(), "spectrum has ",
                 power_spectrum.size(), " bins, filterbank expects ", weights_.cols());
  Vector out(num_mel_ + 1);
  out[0] = std::log(std::max(power_spectrum.sum(), kLogFloor));
  const Vector energies = weights_ * power_spectrum;
  for (int32 m = 0; m < num_mel_; m++)
    out[m + 1] = std::log(std::max(energies[m], kLogFloor));
  return out;
}

namespace {

// Regression delta over +-2 frames with edge replication.
Matrix Delta(const Matrix &x) {
  const Eigen::Index num_frames = x.rows();
  Matrix d = Matrix::Zero(num_frames, x.cols());
  const double denom = 2.0 * (1 * 1 + 2 * 2);
  for (Eigen::Index t = 0; t < num_frames; t++) {
    for (int n = 1; n <= 2; n++) {
      const Eigen::Index ahead = std::min<Eigen::Index>(t + n, num_frames - 1);
      const Eigen::Index behind = std::max<Eigen::Index>(t - n, 0);
      d.row(t) += n * (x.row(ahead) - x.row(behind));
    }
    d.row(t) /= denom;
  }
  return d;
}

}  // namespace

Matrix AppendDeltas(const Matrix &features) {
  if (features.rows() < 1) throw Error("AppendDeltas needs at least one frame");
  const Eigen::Index dim = features.cols();
  Matrix out(features.rows(), 3 * dim);
  const Matrix delta = Delta(features);
  out.leftCols(dim) = features;
  out.middleCols(dim, dim) = delta;
  out.rightCols(dim) = Delta(delta);
  return out;
}

FeatureSequence Normalize(const FeatureSequence &features) {
  if (features.NumFrames() < 1) throw Error("Normalize needs at least one frame");
  const Matrix x = features.frames.cast<double>();
  const RowVector mean = x.colwise().mean();
  const Matrix centered = x.rowwise() - mean;
  RowVector var = centered.colwise().squaredNorm() / static_cast<double>(x.rows());
  FeatureSequence out = features;
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index d = 0; d < x.cols(); d++) {
    // A column whose variance is below the floor is constant up to rounding.
    const double scale = var[d] < kVarianceFloor ? 0.0 : 1.0 / std::sqrt(var[d]);
    y.col(d) = centered.col(d) * scale;
  }
  out.frames = y.cast<float>();
  return out;
}

Matrix ContextWindow(const Matrix &frames, int32 left, int32 right) {
  if (left < 0 || right < 0) throw Error("context sizes must be non-negative");
  const Eigen::Index num_frames = frames.rows(), dim = frames.cols();
  const int32 width = left + right + 1;
  Matrix out(num_frames, dim * width);
  for (Eigen::Index t = 0; t < num_frames; t++) {
    for (int32 k = 0; k < width; k++) {
      const Eigen::Index src = std::clamp<Eigen::Index>(t - left + k, 0, num_frames - 1);
      out.block(t, k * dim, 1, dim) = frames.row(src);
    }
  }
  return out;
}

FeatureSequence ComputeFbank(const WaveUtterance &wave, const FbankOptions &opts) {
  const Matrix frames = FrameSignal(wave, opts.frame_length_ms, opts.frame_shift_ms);
  const int32 fft_size = NextPowerOfTwo(static_cast<int32>(frames.cols()));
  MelBanks banks(opts.num_mel, wave.sample_rate, fft_size);

  Matrix statics(frames.rows(), opts.num_mel + 1);
  for (Eigen::Index t = 0; t < frames.rows(); t++) {
    const Vector power = PowerSpectrum(
        std::span<const double>(frames.row(t).data(), static_cast<size_t>(frames.cols())));
    statics.row(t) = banks.Compute(power).transpose();
  }

  FeatureSequence seq;
  seq.utterance_id = wave.utterance_id;
  seq.num_bands = opts.num_mel + 1;
  seq.num_channels = opts.add_deltas ? 3 : 1;
  seq.frames = (opts.add_deltas ? AppendDeltas(statics) : statics).cast<float>();
  if (opts.normalize) seq = Normalize(seq);
  seq.Check();
  return seq;
}

}  // namespace crnn
