// crnn/gradcheck.cc

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

#include "crnn/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

namespace crnn {

double GradcheckReport::MaxError() const {
  double m = 0.0;
  for (const auto &b : blocks) m = std::max(m, b.max_rel_error);
  return m;
}

std::string GradcheckReport::ToString() const {
  std::ostringstream os;
  char buf[64];
  for (const auto &b : blocks) {
    std::snprintf(buf, sizeof(buf), "%.3e", b.max_rel_error);
    os << b.name << " size=" << b.size << " checked=" << b.num_checked
       << " max_rel_error=" << buf << '\n';
  }
  return os.str();
}

double RelativeError(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradcheckReport CheckGradient(const LossFunction &loss, std::vector<double> params,
                              std::span<const double> analytic,
                              const std::vector<GradBlock> &blocks,
                              const GradcheckOptions &opts) {
  CRNN_CHECK_DIM(analytic.size() == params.size(), "gradcheck: ", analytic.size(),
                 " gradient entries for ", params.size(), " parameters");
  std::mt19937_64 rng(opts.seed);
  GradcheckReport report;
  for (const auto &block : blocks) {
    CRNN_CHECK_DIM(block.offset >= 0 && block.offset + block.size <=
                                            static_cast<int64>(params.size()),
                   "gradcheck: block ", block.name, " out of range");
    if (block.size == 0) continue;
    std::vector<int64> idx(block.size);
    std::iota(idx.begin(), idx.end(), 0);
    const int64 n = std::min<int64>(block.size, opts.samples_per_block);
    // Partial Fisher-Yates: the first n entries become the sample.
    for (int64 k = 0; k < n && n < block.size; k++) {
      std::uniform_int_distribution<int64> pick(k, block.size - 1);
      std::swap(idx[k], idx[pick(rng)]);
    }
    idx.resize(n);
    std::sort(idx.begin(), idx.end());

    BlockReport br;
    br.name = block.name;
    br.size = block.size;
    for (int64 i : idx) {
      double &p = params[block.offset + i];
      const double saved = p;
      p = saved + opts.epsilon;
      const double up = loss(params);
      p = saved - opts.epsilon;
      const double down = loss(params);
      p = saved;
      const double numeric = (up - down) / (2.0 * opts.epsilon);
      const double a = analytic[block.offset + i];
      const double err = RelativeError(a, numeric);
      if (err > br.max_rel_error || br.worst_index < 0) {
        br.max_rel_error = err;
        br.worst_index = i;
        br.worst_analytic = a;
        br.worst_numeric = numeric;
      }
      br.num_checked++;
    }
    report.blocks.push_back(br);
  }
  return report;
}

GradcheckReport GradcheckNetwork(const Network &net, const ParameterSet &params,
                                 const SubsequenceBatch &batch, const GradcheckOptions &opts) {
  ParameterSet grad;
  ComputeGradient(net, params, batch, &grad);
  std::vector<GradBlock> blocks;
  for (const auto &b : net.Blocks()) blocks.push_back({b.FullName(), b.offset, b.Size()});
  ParameterSet scratch;
  const LossFunction loss = [&](const std::vector<double> &values) {
    scratch.values = values;
    const Matrix post = net.Forward(scratch, batch.features, batch.num_streams);
    return CrossEntropy(post, batch.targets, batch.loss_mask).loss;
  };
  return CheckGradient(loss, params.values, grad.values, blocks, opts);
}

}  // namespace crnn
