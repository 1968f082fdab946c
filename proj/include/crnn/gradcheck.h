// crnn/gradcheck.h

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

// Finite-difference check of analytic gradients.

#ifndef CRNN_GRADCHECK_H_
#define CRNN_GRADCHECK_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "crnn/network.h"
#include "crnn/training.h"

namespace crnn {

struct GradcheckOptions {
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  int32 samples_per_block = 200;  // every entry is checked in smaller blocks
  uint64 seed = 0;
};

struct BlockReport {
  std::string name;
  int64 size = 0;
  int32 num_checked = 0;
  double max_rel_error = 0.0;
  int64 worst_index = -1;  // within the block
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradcheckReport {
  std::vector<BlockReport> blocks;

  double MaxError() const;
  bool Passed(double tolerance) const { return MaxError() < tolerance; }
  /// One line per block: name, size, checked count, max relative error.
  std::string ToString() const;
};

/// |a - n| / max(|a|, |n|, 1e-8).
double RelativeError(double analytic, double numeric);

struct GradBlock {
  std::string name;
  int64 offset = 0;
  int64 size = 0;
};

using LossFunction = std::function<double(const std::vector<double> &)>;

/// Compares `analytic` against central differences of `loss` around `params`
/// on a seeded sample of entries from each block.
GradcheckReport CheckGradient(const LossFunction &loss, std::vector<double> params,
                              std::span<const double> analytic,
                              const std::vector<GradBlock> &blocks,
                              const GradcheckOptions &opts);

/// Checks the batch cross-entropy gradient of every parameter block of `net`.
GradcheckReport GradcheckNetwork(const Network &net, const ParameterSet &params,
                                 const SubsequenceBatch &batch, const GradcheckOptions &opts);

}  // namespace crnn

#endif  // CRNN_GRADCHECK_H_
