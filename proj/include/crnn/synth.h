// crnn/synth.h

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

// Synthetic filterbank corpus.
//
// Each class owns two band profiles of `pattern_width` bands.  A segment of
// that class shows the first profile morphing linearly into the second over
// the segment, so a class is a small spectro-temporal shape rather than a
// static vector.  Utterances are runs of segments whose classes cycle through
// shuffled permutations of all classes, which keeps labels balanced.  Every
// utterance draws one integer band shift and its patterns are moved by it.
// Gaussian noise is added to every band, then deltas are appended and the
// utterance is mean/variance normalized like real features.

#ifndef CRNN_SYNTH_H_
#define CRNN_SYNTH_H_

#include <vector>

#include "crnn/training.h"

namespace crnn {

struct SynthOptions {
  int32 num_utterances = 50;
  int32 num_test_utterances = 20;
  int32 num_frames = 100;
  int32 num_classes = 10;
  int32 num_bands = 33;
  int32 pattern_width = 7;
  int32 min_segment = 6;
  int32 max_segment = 10;
  int32 shift_range = 0;
  /// Train shifts satisfy |s| <= shift_range / 2, test shifts lie strictly
  /// outside that range.  Otherwise both draw from [-shift_range, shift_range].
  bool disjoint_shifts = false;
  double noise = 0.3;
  uint64 seed = 0;

  /// Throws Error on inconsistent options.
  void Validate() const;
};

struct SynthCorpus {
  Corpus train;
  Corpus test;
  std::vector<int32> train_shifts;
  std::vector<int32> test_shifts;
};

SynthCorpus GenerateSynthetic(const SynthOptions &opts);

}  // namespace crnn

#endif  // CRNN_SYNTH_H_
