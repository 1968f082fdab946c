// crnn/network.h

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

#ifndef CRNN_NETWORK_H_
#define CRNN_NETWORK_H_

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "crnn/arch-spec.h"
#include "crnn/features.h"
#include "crnn/layers.h"

namespace crnn {

/// Every trainable value of a network in one flat buffer; the same shape is
/// used for gradients.
struct ParameterSet {
  std::vector<double> values;

  size_t Size() const { return values.size(); }
  std::span<double> Flat() { return values; }
  std::span<const double> Flat() const { return values; }
  void SetZero() { std::fill(values.begin(), values.end(), 0.0); }
  bool operator==(const ParameterSet &) const = default;
};

struct ParamBlockInfo {
  int32 layer = 0;
  std::string layer_name;
  std::string name;
  int64 offset = 0;
  int32 rows = 0;
  int32 cols = 0;

  int64 Size() const { return static_cast<int64>(rows) * cols; }
  std::string FullName() const { return StrCat(layer, ":", layer_name, ".", name); }
};

/// Activations recorded by Network::Forward.
struct NetworkTape {
  int32 num_streams = 0;
  std::vector<Matrix> activations;  // [0] is the input, back() the posteriors
  std::vector<std::unique_ptr<LayerState>> states;
};

/// A wired stack of components ending in an affine layer and a softmax.  The
/// network itself holds no parameters and is safe to share between threads.
class Network {
 public:
  explicit Network(const NetworkSpec &spec);

  const NetworkSpec &Spec() const { return spec_; }
  int32 NumComponents() const { return static_cast<int32>(components_.size()); }
  const Component &GetComponent(int32 c) const { return *components_.at(c); }
  int32 InputDim() const { return components_.front()->InputDim(); }
  int32 NumClasses() const { return spec_.num_classes; }
  int64 NumParams() const { return offsets_.back(); }

  std::span<const double> ComponentParams(const ParameterSet &params, int32 c) const;
  std::span<double> ComponentParams(ParameterSet *params, int32 c) const;
  std::vector<ParamBlockInfo> Blocks() const;

  /// Uniform weights in [-scale, scale]; biases zero except forget gates (1).
  ParameterSet InitParams(uint64 seed, double scale = 0.05) const;

  /// `in` is (T*S) x InputDim() with row t*S + s.  Returns posteriors of the
  /// same row order; the tape is filled when non-null.
  Matrix Forward(const ParameterSet &params, const Matrix &in, int32 num_streams,
                 NetworkTape *tape = nullptr) const;

  /// Accumulates dLoss/dparams into `grad` given dLoss/dposteriors.
  void Backward(const ParameterSet &params, const NetworkTape &tape,
                const Matrix &posterior_diff, ParameterSet *grad,
                Matrix *in_diff = nullptr) const;

 private:
  NetworkSpec spec_;
  std::vector<std::unique_ptr<Component>> components_;
  std::vector<int64> offsets_;  // size NumComponents() + 1
};

/// Parameter count without allocating any parameters.
int64 CountParams(const NetworkSpec &spec);

/// "6,704,529" and "6.7M".
std::string FormatWithCommas(int64 n);
std::string FormatMillions(int64 n);

/// log(max(p, 1e-10)) - log(prior), elementwise per row.
Matrix PosteriorToPseudoLikelihood(const Matrix &posteriors, const Vector &priors);

/// Empirical label frequencies with add-one smoothing.
Vector ComputePriors(const std::vector<AlignmentSequence> &alignments, int32 num_classes);

// Checkpoint: "CRNP", version u32, component count u32, then per component
// its type tag u32, dim count u32, the dims as u32, parameter count u64 and
// the parameters as float64 in ParamShapes() order.
void WriteCheckpoint(const std::string &path, const Network &net, const ParameterSet &params);
/// Throws FormatError when the file does not describe `net`.
ParameterSet ReadCheckpoint(const std::string &path, const Network &net);

}  // namespace crnn

#endif  // CRNN_NETWORK_H_
