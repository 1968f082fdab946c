// crnn/features.h

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

// Mel log-filterbank front-end: framing, power spectrum, triangular mel
// filters, regression deltas, per-utterance normalization and context
// splicing.

#ifndef CRNN_FEATURES_H_
#define CRNN_FEATURES_H_

#include <span>
#include <string>
#include <vector>

#include "crnn/base.h"

namespace crnn {

inline constexpr double kLogFloor = 1e-10;
inline constexpr double kVarianceFloor = 1e-8;

struct WaveUtterance {
  std::string utterance_id;
  std::vector<double> samples;
  double sample_rate = 0.0;
};

/// Frames of a feature sequence store `num_channels` blocks of `num_bands`
/// columns each: [static | delta | delta-delta].  Column of (band b,
/// channel c) is c * num_bands + b.
struct FeatureSequence {
  std::string utterance_id;
  FloatMatrix frames;
  int32 num_bands = 0;
  int32 num_channels = 0;

  int32 NumFrames() const { return static_cast<int32>(frames.rows()); }
  int32 Dim() const { return static_cast<int32>(frames.cols()); }
  /// Throws FormatError if D != F * C or a value is not finite.
  void Check() const;
};

struct AlignmentSequence {
  std::string utterance_id;
  std::vector<int32> labels;
};

struct FbankOptions {
  double frame_length_ms = 25.0;
  double frame_shift_ms = 10.0;
  int32 num_mel = 32;
  bool add_deltas = true;
  bool normalize = true;
};

/// Hamming-windowed frames, one per row.  Throws Error when the wave is
/// shorter than one frame.
Matrix FrameSignal(const WaveUtterance &wave, double frame_length_ms,
                   double frame_shift_ms);

/// Number of frames produced for a signal of `num_samples` samples.
int32 NumFrames(int64 num_samples, int32 frame_length, int32 frame_shift);

/// One-sided power spectrum |X_k|^2, k = 0..N/2, of a frame zero-padded to
/// the next power of two.
Vector PowerSpectrum(std::span<const double> frame);

/// Triangular mel filters with HTK spacing between 0 Hz and Nyquist.  Row m
/// holds the weights of filter m over the `fft_size / 2 + 1` spectrum bins.
class MelBanks {
 public:
  MelBanks(int32 num_mel, double sample_rate, int32 fft_size);

  int32 NumBins() const { return num_mel_; }
  /// Center frequency of filter `m` in Hz.
  double CenterHz(int32 m) const;
  const Matrix &Weights() const { return weights_; }

  /// Returns num_mel + 1 values: log frame energy first, then the log mel
  /// energies in increasing frequency order.  Every energy is floored at
  /// kLogFloor before the log.
  Vector Compute(const Vector &power_spectrum) const;

  static double MelScale(double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); }
  static double InverseMelScale(double mel) {
    return 700.0 * (std::exp(mel / 1127.0) - 1.0);
  }

 private:
  int32 num_mel_;
  double sample_rate_;
  int32 fft_size_;
  std::vector<double> centers_mel_;
  Matrix weights_;
};

/// Appends first- and second-order regression deltas (window +-2, edge
/// replication).  Output is T x 3F with the input as the first F columns.
Matrix AppendDeltas(const Matrix &features);

/// Per-dimension zero mean, unit variance over the utterance.
FeatureSequence Normalize(const FeatureSequence &features);

/// Row t of the result is frames t-left .. t+right concatenated, with the
/// first and last frames replicated past the utterance boundary.
Matrix ContextWindow(const Matrix &frames, int32 left, int32 right);

/// Full front-end: framing, filterbank, deltas, normalization.
FeatureSequence ComputeFbank(const WaveUtterance &wave,
                             const FbankOptions &opts = FbankOptions());

/// Reads a mono 16-bit PCM WAV file.  Only 8 kHz and 16 kHz are accepted.
WaveUtterance ReadWave(const std::string &path, const std::string &utterance_id);
void WriteWave(const std::string &path, const WaveUtterance &wave);

// Binary feature file: "CRNF", version, T, D, F, C as little-endian u32,
// then T*D float32 row-major, then the utterance id (u32 length + bytes).
void WriteFeatures(const std::string &path, const FeatureSequence &features);
FeatureSequence ReadFeatures(const std::string &path);

/// Text alignments, one utterance per line: `id label_0 label_1 ...`.
void WriteAlignments(const std::string &path,
                     const std::vector<AlignmentSequence> &alignments);
std::vector<AlignmentSequence> ReadAlignments(const std::string &path);

/// Reads every *.crnf file of `dir` in lexicographic order.
std::vector<FeatureSequence> ReadFeatureDir(const std::string &dir);

}  // namespace crnn

#endif  // CRNN_FEATURES_H_
