// crnn/synth.cc

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

#include "crnn/synth.h"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>

namespace crnn {

void SynthOptions::Validate() const {
  if (num_utterances < 1 || num_test_utterances < 0 || num_frames < 1)
    throw Error("synthetic corpus needs at least one utterance of one frame");
  if (num_classes < 1) throw Error("synthetic corpus needs at least one class");
  if (min_segment < 1 || max_segment < min_segment)
    throw Error("need 1 <= min_segment <= max_segment");
  if (shift_range < 0) throw Error("shift range must be >= 0");
  if (disjoint_shifts && shift_range < 1)
    throw Error("disjoint shifts need a shift range of at least 1");
  if (noise < 0) throw Error("noise must be >= 0");
  const int32 lo = num_bands / 2 - pattern_width / 2 - shift_range;
  const int32 hi = lo + pattern_width - 1 + 2 * shift_range;
  if (pattern_width < 1 || lo < 0 || hi >= num_bands)
    throw Error(StrCat("patterns of width ", pattern_width, " shifted by up to ", shift_range,
                       " do not fit in ", num_bands, " bands"));
}

namespace {

struct ClassPattern {
  std::vector<double> begin, end;
};

std::vector<int32> AllowedShifts(const SynthOptions &opts, bool test) {
  std::vector<int32> shifts;
  const int32 r = opts.shift_range, half = opts.shift_range / 2;
  for (int32 s = -r; s <= r; s++) {
    if (!opts.disjoint_shifts) {
      shifts.push_back(s);
    } else {
      const bool inner = std::abs(s) <= half;
      if (inner != test) shifts.push_back(s);
    }
  }
  return shifts;
}

void MakeUtterance(const SynthOptions &opts, const std::vector<ClassPattern> &patterns,
                   const std::string &id, int32 shift, std::mt19937_64 &rng,
                   Corpus *corpus) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int32> seg_len(opts.min_segment, opts.max_segment);
  std::vector<int32> perm(opts.num_classes);
  std::iota(perm.begin(), perm.end(), 0);

  AlignmentSequence ali{id, {}};
  Matrix frames = Matrix::Zero(opts.num_frames, opts.num_bands);
  const int32 first_band = opts.num_bands / 2 - opts.pattern_width / 2 + shift;
  size_t next = perm.size();
  for (int32 t = 0; t < opts.num_frames;) {
    if (next == perm.size()) {
      std::shuffle(perm.begin(), perm.end(), rng);
      next = 0;
    }
    const int32 c = perm[next++];
    const int32 len = seg_len(rng);
    const int32 end = std::min(t + len, opts.num_frames);
    for (int32 k = 0; t < end; t++, k++) {
      const double alpha = len > 1 ? static_cast<double>(k) / (len - 1) : 0.0;
      for (int32 w = 0; w < opts.pattern_width; w++)
        frames(t, first_band + w) =
            (1.0 - alpha) * patterns[c].begin[w] + alpha * patterns[c].end[w];
      ali.labels.push_back(c);
    }
  }
  for (Eigen::Index t = 0; t < frames.rows(); t++)
    for (Eigen::Index b = 0; b < frames.cols(); b++) frames(t, b) += opts.noise * gauss(rng);

  FeatureSequence fs;
  fs.utterance_id = id;
  fs.num_bands = opts.num_bands;
  fs.num_channels = 3;
  fs.frames = AppendDeltas(frames).cast<float>();
  corpus->features.push_back(Normalize(fs));
  corpus->alignments.push_back(std::move(ali));
}

}  // namespace

SynthCorpus GenerateSynthetic(const SynthOptions &opts) {
  opts.Validate();
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<ClassPattern> patterns(opts.num_classes);
  for (auto &p : patterns) {
    p.begin.resize(opts.pattern_width);
    p.end.resize(opts.pattern_width);
    for (double &v : p.begin) v = gauss(rng);
    for (double &v : p.end) v = gauss(rng);
  }

  SynthCorpus out;
  out.train.num_classes = out.test.num_classes = opts.num_classes;
  const auto train_shifts = AllowedShifts(opts, false);
  const auto test_shifts = AllowedShifts(opts, true);
  auto generate = [&](int32 count, const std::vector<int32> &allowed, const char *prefix,
                      Corpus *corpus, std::vector<int32> *shifts) {
    std::uniform_int_distribution<size_t> pick(0, allowed.size() - 1);
    for (int32 u = 0; u < count; u++) {
      const int32 shift = allowed[pick(rng)];
      char id[32];
      std::snprintf(id, sizeof(id), "%s%05d", prefix, u);
      MakeUtterance(opts, patterns, id, shift, rng, corpus);
      shifts->push_back(shift);
    }
  };
  generate(opts.num_utterances, train_shifts, "train", &out.train, &out.train_shifts);
  generate(opts.num_test_utterances, test_shifts, "test", &out.test, &out.test_shifts);
  return out;
}

}  // namespace crnn
