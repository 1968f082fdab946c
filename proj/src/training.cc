// crnn/training.cc

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

#include "crnn/training.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace crnn {

void TrainConfig::Validate() const {
  if (subseq_len < 1) throw Error("subsequence length must be >= 1");
  if (overlap < 0 || overlap >= subseq_len)
    throw Error(StrCat("overlap must be in [0, ", subseq_len, "), got ", overlap));
  if (batch_size < 1) throw Error("batch size must be >= 1");
  if (label_delay < 0) throw Error("label delay must be >= 0");
  if (!(clip_threshold > 0)) throw Error("clip threshold must be positive");
  if (!(lr_init >= 0) || !(lr_final >= 0) || lr_final > lr_init)
    throw Error(StrCat("need 0 <= lr_final <= lr_init, got ", lr_final, " and ", lr_init));
  if (epochs < 0) throw Error("epochs must be >= 0");
}

std::vector<Subsequence> SplitSubsequences(int32 num_frames, int32 length, int32 overlap) {
  if (length < 1 || overlap < 0 || overlap >= length)
    throw Error(StrCat("need length > overlap >= 0, got ", length, " and ", overlap));
  std::vector<Subsequence> out;
  if (num_frames <= 0) return out;
  const int32 stride = length - overlap;
  int32 start = 0, covered = 0;
  while (true) {
    const int32 end = std::min(start + length, num_frames);
    out.push_back({start, end, covered - start});
    covered = end;
    if (end == num_frames) break;
    start += stride;
    if (start + length > num_frames) start = num_frames - length;
  }
  return out;
}

DelayedTargets DelayLabels(std::span<const int32> labels, int32 delay) {
  if (delay < 0) throw Error("label delay must be >= 0");
  DelayedTargets out;
  const size_t n = labels.size();
  out.targets.assign(n, 0);
  out.valid.assign(n, 0);
  for (size_t t = static_cast<size_t>(delay); t < n; t++) {
    out.targets[t] = labels[t - delay];
    out.valid[t] = 1;
  }
  return out;
}

CrossEntropyResult CrossEntropy(const Matrix &posteriors, std::span<const int32> targets,
                                std::span<const uint8_t> mask) {
  CRNN_CHECK_DIM(static_cast<size_t>(posteriors.rows()) == targets.size() &&
                     targets.size() == mask.size(),
                 "cross entropy: ", posteriors.rows(), " rows, ", targets.size(),
                 " targets, ", mask.size(), " mask entries");
  CrossEntropyResult result;
  double total = 0.0;
  for (size_t r = 0; r < targets.size(); r++) {
    if (!mask[r]) continue;
    CRNN_CHECK_DIM(targets[r] >= 0 && targets[r] < posteriors.cols(), "target ", targets[r],
                   " outside [0, ", posteriors.cols(), ")");
    total -= std::log(std::max(posteriors(r, targets[r]), kLogFloor));
    result.num_frames++;
  }
  if (result.num_frames == 0) throw Error("cross entropy over an empty batch: every frame is masked");
  result.loss = total / static_cast<double>(result.num_frames);
  return result;
}

Matrix CrossEntropyGradient(const Matrix &posteriors, std::span<const int32> targets,
                            std::span<const uint8_t> mask) {
  int64 count = 0;
  for (uint8_t m : mask) count += m ? 1 : 0;
  Matrix diff = Matrix::Zero(posteriors.rows(), posteriors.cols());
  if (count == 0) return diff;
  for (size_t r = 0; r < targets.size(); r++) {
    const double p = posteriors(r, targets[r]);
    if (mask[r] && p >= kLogFloor) diff(r, targets[r]) = -1.0 / (p * static_cast<double>(count));
  }
  return diff;
}

double GlobalNorm(std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum);
}

double ClipGradients(std::span<double> grads, double threshold, int64 step) {
  if (!(threshold > 0)) throw Error("clip threshold must be positive");
  const double norm = GlobalNorm(grads);
  if (!std::isfinite(norm)) throw DivergenceError("non-finite gradient", step);
  if (norm > threshold) {
    const double scale = threshold / norm;
    for (double &g : grads) g *= scale;
  }
  return norm;
}

double LearningRate(int64 step, int64 total_steps, double lr_init, double lr_final) {
  if (step <= 0 || total_steps <= 0) return lr_init;
  if (step >= total_steps) return lr_final;
  if (lr_init <= 0.0) return lr_init;
  return lr_init * std::pow(lr_final / lr_init,
                            static_cast<double>(step) / static_cast<double>(total_steps));
}

void SgdStep(std::span<double> params, std::span<const double> grads, double lr) {
  CRNN_CHECK_DIM(params.size() == grads.size(), "SGD: ", params.size(), " parameters, ",
                 grads.size(), " gradients");
  for (size_t k = 0; k < params.size(); k++) params[k] -= lr * grads[k];
}

void Corpus::Check() {
  if (num_classes <= 0) throw Error("corpus needs a positive class count");
  std::map<std::string, size_t> by_id;
  for (size_t k = 0; k < alignments.size(); k++) {
    if (!by_id.emplace(alignments[k].utterance_id, k).second)
      throw Error("duplicate alignment for " + alignments[k].utterance_id);
  }
  std::vector<AlignmentSequence> ordered;
  ordered.reserve(features.size());
  for (const auto &f : features) {
    f.Check();
    auto it = by_id.find(f.utterance_id);
    if (it == by_id.end()) throw Error("no alignment for utterance " + f.utterance_id);
    const AlignmentSequence &ali = alignments[it->second];
    if (static_cast<int32>(ali.labels.size()) != f.NumFrames())
      throw Error(StrCat(f.utterance_id, ": ", ali.labels.size(), " labels for ",
                         f.NumFrames(), " frames"));
    for (int32 l : ali.labels)
      if (l < 0 || l >= num_classes)
        throw Error(StrCat(f.utterance_id, ": label ", l, " outside [0, ", num_classes, ")"));
    ordered.push_back(ali);
  }
  alignments = std::move(ordered);
}

Corpus LoadCorpus(const std::string &feature_dir, const std::string &alignment_path,
                  int32 num_classes) {
  Corpus corpus;
  corpus.features = ReadFeatureDir(feature_dir);
  corpus.alignments = ReadAlignments(alignment_path);
  if (num_classes <= 0) {
    int32 max_label = -1;
    for (const auto &a : corpus.alignments)
      for (int32 l : a.labels) max_label = std::max(max_label, l);
    num_classes = max_label + 1;
  }
  corpus.num_classes = num_classes;
  corpus.Check();
  return corpus;
}

void SaveCorpus(const Corpus &corpus, const std::string &feature_dir,
                const std::string &alignment_path) {
  std::filesystem::create_directories(feature_dir);
  for (const auto &f : corpus.features)
    WriteFeatures((std::filesystem::path(feature_dir) / (f.utterance_id + ".crnf")).string(), f);
  WriteAlignments(alignment_path, corpus.alignments);
}

std::pair<Corpus, Corpus> SplitCorpus(const Corpus &corpus, double valid_fraction,
                                      uint64 seed) {
  if (valid_fraction < 0.0 || valid_fraction >= 1.0)
    throw Error("validation fraction must be in [0, 1)");
  const size_t n = corpus.Size();
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const size_t num_valid = static_cast<size_t>(std::llround(valid_fraction * static_cast<double>(n)));
  std::vector<uint8_t> is_valid(n, 0);
  for (size_t k = 0; k < num_valid; k++) is_valid[idx[k]] = 1;
  Corpus train, valid;
  train.num_classes = valid.num_classes = corpus.num_classes;
  for (size_t k = 0; k < n; k++) {
    Corpus &dst = is_valid[k] ? valid : train;
    dst.features.push_back(corpus.features[k]);
    dst.alignments.push_back(corpus.alignments[k]);
  }
  return {std::move(train), std::move(valid)};
}

std::vector<PreparedUtterance> PrepareCorpus(const Corpus &corpus, const InputSpec &input,
                                             int32 label_delay) {
  std::vector<PreparedUtterance> out;
  out.reserve(corpus.Size());
  for (size_t k = 0; k < corpus.Size(); k++) {
    const FeatureSequence &f = corpus.features[k];
    if (f.num_bands != input.bands || f.num_channels != input.channels)
      throw DimensionError(StrCat(f.utterance_id, ": features are ", f.num_bands, " bands x ",
                                  f.num_channels, " channels, network expects ", input.bands,
                                  " x ", input.channels));
    PreparedUtterance u;
    u.utterance_id = f.utterance_id;
    const Matrix frames = f.frames.cast<double>();
    u.input = input.context > 0 ? ContextWindow(frames, input.context, input.context) : frames;
    u.targets = DelayLabels(corpus.alignments[k].labels, label_delay);
    out.push_back(std::move(u));
  }
  return out;
}

int64 SubsequenceBatch::NumValid() const {
  int64 n = 0;
  for (uint8_t m : loss_mask) n += m ? 1 : 0;
  return n;
}

std::vector<SubsequenceBatch> MakeBatches(const std::vector<PreparedUtterance> &utterances,
                                          const std::vector<int32> &order,
                                          const TrainConfig &config) {
  std::vector<std::vector<Subsequence>> slices(utterances.size());
  for (size_t u = 0; u < utterances.size(); u++)
    slices[u] = SplitSubsequences(static_cast<int32>(utterances[u].input.rows()),
                                  config.subseq_len, config.overlap);

  // Round-robin over utterances: one subsequence from each in turn.
  std::vector<std::pair<int32, int32>> stream;
  std::vector<size_t> next(utterances.size(), 0);
  for (bool any = true; any;) {
    any = false;
    for (int32 u : order) {
      if (next[u] < slices[u].size()) {
        stream.emplace_back(u, static_cast<int32>(next[u]++));
        any = true;
      }
    }
  }

  std::vector<SubsequenceBatch> batches;
  for (size_t first = 0; first < stream.size(); first += config.batch_size) {
    const size_t count = std::min<size_t>(config.batch_size, stream.size() - first);
    SubsequenceBatch batch;
    batch.num_streams = static_cast<int32>(count);
    for (size_t b = 0; b < count; b++) {
      const auto [u, s] = stream[first + b];
      batch.length = std::max(batch.length, slices[u][s].Length());
    }
    const Eigen::Index dim = utterances.empty() ? 0 : utterances[0].input.cols();
    const size_t rows = static_cast<size_t>(batch.length) * count;
    batch.features = Matrix::Zero(static_cast<Eigen::Index>(rows), dim);
    batch.targets.assign(rows, 0);
    batch.loss_mask.assign(rows, 0);
    for (size_t b = 0; b < count; b++) {
      const auto [u, s] = stream[first + b];
      const PreparedUtterance &utt = utterances[u];
      const Subsequence &sub = slices[u][s];
      batch.provenance.emplace_back(utt.utterance_id, sub.start);
      for (int32 t = 0; t < sub.Length(); t++) {
        const size_t row = static_cast<size_t>(t) * count + b;
        const int32 frame = sub.start + t;
        batch.features.row(static_cast<Eigen::Index>(row)) = utt.input.row(frame);
        batch.targets[row] = utt.targets.targets[frame];
        batch.loss_mask[row] = (t >= sub.loss_offset && utt.targets.valid[frame]) ? 1 : 0;
      }
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

CrossEntropyResult ComputeGradient(const Network &net, const ParameterSet &params,
                                   const SubsequenceBatch &batch, ParameterSet *grad) {
  NetworkTape tape;
  const Matrix post = net.Forward(params, batch.features, batch.num_streams, &tape);
  const CrossEntropyResult ce = CrossEntropy(post, batch.targets, batch.loss_mask);
  grad->values.assign(params.Size(), 0.0);
  net.Backward(params, tape, CrossEntropyGradient(post, batch.targets, batch.loss_mask), grad);
  return ce;
}

EvalResult Evaluate(const Network &net, const ParameterSet &params, const Corpus &corpus,
                    const TrainConfig &config) {
  const auto utterances = PrepareCorpus(corpus, net.Spec().input, config.label_delay);
  std::vector<int32> order(utterances.size());
  std::iota(order.begin(), order.end(), 0);
  EvalResult result;
  double total_ce = 0.0;
  int64 correct = 0;
  for (const auto &batch : MakeBatches(utterances, order, config)) {
    const Matrix post = net.Forward(params, batch.features, batch.num_streams);
    for (size_t r = 0; r < batch.targets.size(); r++) {
      if (!batch.loss_mask[r]) continue;
      const auto row = post.row(static_cast<Eigen::Index>(r));
      Eigen::Index best = 0;
      for (Eigen::Index k = 1; k < row.size(); k++)
        if (row[k] > row[best]) best = k;
      if (best == batch.targets[r]) correct++;
      total_ce -= std::log(std::max(row[batch.targets[r]], kLogFloor));
      result.num_frames++;
    }
  }
  if (result.num_frames > 0) {
    result.frame_accuracy = static_cast<double>(correct) / static_cast<double>(result.num_frames);
    result.cross_entropy = total_ce / static_cast<double>(result.num_frames);
  }
  return result;
}

std::string EpochMetrics::ToLine() const {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%d %.6f %.6f %.6f %.6g", epoch, train_ce, valid_ce,
                valid_accuracy, lr);
  return buf;
}

TrainResult Train(const Network &net, ParameterSet params, const Corpus &train,
                  const Corpus *valid, const TrainConfig &config,
                  const std::function<void(const EpochMetrics &)> &on_epoch) {
  config.Validate();
  if (train.Size() == 0) throw Error("training corpus is empty");
  if (train.num_classes != net.NumClasses())
    throw Error(StrCat("corpus has ", train.num_classes, " classes, network outputs ",
                       net.NumClasses()));
  const auto utterances = PrepareCorpus(train, net.Spec().input, config.label_delay);

  std::vector<int32> order(utterances.size());
  std::iota(order.begin(), order.end(), 0);
  const int64 batches_per_epoch = static_cast<int64>(MakeBatches(utterances, order, config).size());
  const int64 total_steps = batches_per_epoch * config.epochs;
  const int64 last_step = std::max<int64>(total_steps - 1, 1);

  std::mt19937_64 rng(config.seed);
  TrainResult result;
  ParameterSet grad;
  int64 step = 0;
  double lr = config.lr_init;
  for (int32 epoch = 1; epoch <= config.epochs; epoch++) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int64 frames = 0;
    for (const auto &batch : MakeBatches(utterances, order, config)) {
      lr = LearningRate(step, last_step, config.lr_init, config.lr_final);
      if (batch.NumValid() > 0) {
        const CrossEntropyResult ce = ComputeGradient(net, params, batch, &grad);
        if (!std::isfinite(ce.loss)) throw DivergenceError("non-finite training loss", step);
        ClipGradients(grad.Flat(), config.clip_threshold, step);
        SgdStep(params.Flat(), grad.Flat(), lr);
        loss_sum += ce.loss * static_cast<double>(ce.num_frames);
        frames += ce.num_frames;
      }
      step++;
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.train_ce = frames > 0 ? loss_sum / static_cast<double>(frames)
                            : std::numeric_limits<double>::quiet_NaN();
    m.lr = lr;
    if (valid != nullptr && valid->Size() > 0) {
      const EvalResult ev = Evaluate(net, params, *valid, config);
      m.valid_ce = ev.cross_entropy;
      m.valid_accuracy = ev.frame_accuracy;
    } else {
      m.valid_ce = m.valid_accuracy = std::numeric_limits<double>::quiet_NaN();
    }
    result.log.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  result.params = std::move(params);
  return result;
}

}  // namespace crnn
