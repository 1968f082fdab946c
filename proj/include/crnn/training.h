// crnn/training.h

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

// Truncated-BPTT training on fixed-length overlapping subsequences.
//
// Every utterance is cut into subsequences of `subseq_len` frames that
// overlap by `overlap` frames.  Recurrent state starts from zero in each
// subsequence, so the overlap frames act as warm-up: they are run forward but
// only the first subsequence of an utterance takes loss on them.  Targets
// are the alignment delayed by `label_delay` frames, so frame t is trained
// to predict the state of frame t - label_delay.

#ifndef CRNN_TRAINING_H_
#define CRNN_TRAINING_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "crnn/features.h"
#include "crnn/network.h"

namespace crnn {

struct TrainConfig {
  int32 subseq_len = 15;
  int32 overlap = 5;
  int32 batch_size = 20;
  int32 label_delay = 5;
  double clip_threshold = 1.0;
  double lr_init = 0.04;
  double lr_final = 0.0004;
  int32 epochs = 10;
  uint64 seed = 0;
  bool deterministic = true;

  /// Throws Error on an inconsistent configuration.
  void Validate() const;
};

struct Subsequence {
  int32 start = 0;
  int32 end = 0;          // exclusive
  int32 loss_offset = 0;  // frames start .. start+loss_offset-1 are warm-up

  int32 Length() const { return end - start; }
  bool operator==(const Subsequence &) const = default;
};

/// Slices [0, T) with stride L - overlap; the last slice is right-aligned to
/// end at T.  Loss windows [start + loss_offset, end) partition [0, T).
std::vector<Subsequence> SplitSubsequences(int32 num_frames, int32 length, int32 overlap);

struct DelayedTargets {
  std::vector<int32> targets;
  std::vector<uint8_t> valid;
};

/// targets[t] = labels[t - delay] for t >= delay; earlier frames invalid.
DelayedTargets DelayLabels(std::span<const int32> labels, int32 delay);

struct CrossEntropyResult {
  double loss = 0.0;  // mean over unmasked frames
  int64 num_frames = 0;
};

/// Throws Error when every frame is masked.
CrossEntropyResult CrossEntropy(const Matrix &posteriors, std::span<const int32> targets,
                                std::span<const uint8_t> mask);

/// d(mean CE)/d(posteriors); zero where the posterior is below the log floor.
Matrix CrossEntropyGradient(const Matrix &posteriors, std::span<const int32> targets,
                            std::span<const uint8_t> mask);

double GlobalNorm(std::span<const double> values);

/// Rescales `grads` to norm `threshold` when their global L2 norm exceeds it.
/// Returns the norm before clipping.  Throws DivergenceError on NaN/Inf.
double ClipGradients(std::span<double> grads, double threshold, int64 step = 0);

/// lr_init * (lr_final / lr_init)^(step / total_steps).
double LearningRate(int64 step, int64 total_steps, double lr_init, double lr_final);

void SgdStep(std::span<double> params, std::span<const double> grads, double lr);

/// Feature sequences paired with alignments of the same ids.
struct Corpus {
  std::vector<FeatureSequence> features;
  std::vector<AlignmentSequence> alignments;
  int32 num_classes = 0;

  size_t Size() const { return features.size(); }
  /// Reorders alignments to match features and checks lengths and labels.
  void Check();
};

/// Loads *.crnf files of `feature_dir` plus an alignment file.  With
/// num_classes == 0 the count is inferred as max label + 1.
Corpus LoadCorpus(const std::string &feature_dir, const std::string &alignment_path,
                  int32 num_classes);

/// Writes one feature file per utterance and a single alignment file.
void SaveCorpus(const Corpus &corpus, const std::string &feature_dir,
                const std::string &alignment_path);

/// Splits off a seeded random fraction of utterances.
std::pair<Corpus, Corpus> SplitCorpus(const Corpus &corpus, double valid_fraction, uint64 seed);

/// One utterance ready for batching: network input rows and delayed targets.
struct PreparedUtterance {
  std::string utterance_id;
  Matrix input;
  DelayedTargets targets;
};

std::vector<PreparedUtterance> PrepareCorpus(const Corpus &corpus, const InputSpec &input,
                                             int32 label_delay);

/// B subsequences run in lock step; row t*B + b is frame t of stream b.
/// Streams shorter than `length` are zero padded and masked.
struct SubsequenceBatch {
  int32 num_streams = 0;
  int32 length = 0;
  Matrix features;
  std::vector<int32> targets;
  std::vector<uint8_t> loss_mask;
  std::vector<std::pair<std::string, int32>> provenance;  // (utterance, start frame)

  int64 NumValid() const;
};

/// Deals subsequences into batches round-robin over `order`, so consecutive
/// rows of a batch come from different utterances whenever possible.
std::vector<SubsequenceBatch> MakeBatches(const std::vector<PreparedUtterance> &utterances,
                                          const std::vector<int32> &order,
                                          const TrainConfig &config);

struct EvalResult {
  double frame_accuracy = 0.0;
  double cross_entropy = 0.0;
  int64 num_frames = 0;
};

/// Frame accuracy (argmax, ties to the lowest class) and mean CE over the
/// loss frames of every subsequence.
EvalResult Evaluate(const Network &net, const ParameterSet &params, const Corpus &corpus,
                    const TrainConfig &config);

struct EpochMetrics {
  int32 epoch = 0;
  double train_ce = 0.0;
  double valid_ce = 0.0;
  double valid_accuracy = 0.0;
  double lr = 0.0;

  /// `epoch train_ce valid_ce valid_facc lr`.
  std::string ToLine() const;
};

/// Loss and gradient of one batch; `grad` is overwritten.
CrossEntropyResult ComputeGradient(const Network &net, const ParameterSet &params,
                                   const SubsequenceBatch &batch, ParameterSet *grad);

struct TrainResult {
  ParameterSet params;
  std::vector<EpochMetrics> log;
};

/// Minibatch SGD.  `valid` may be null, in which case validation metrics are
/// NaN.  Throws DivergenceError on a non-finite loss or gradient.
TrainResult Train(const Network &net, ParameterSet params, const Corpus &train,
                  const Corpus *valid, const TrainConfig &config,
                  const std::function<void(const EpochMetrics &)> &on_epoch = {});

}  // namespace crnn

#endif  // CRNN_TRAINING_H_
