// crnn/layer-component.h

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

#ifndef CRNN_LAYER_COMPONENT_H_
#define CRNN_LAYER_COMPONENT_H_

#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "crnn/base.h"

namespace crnn {

/// Numeric tags are part of the checkpoint format; never renumber.
enum class ComponentType : uint32 {
  kRnn = 1,
  kLstm = 2,
  kConv = 3,
  kClstm = 4,
  kMaxPool = 5,
  kRelu = 6,
  kMaxout = 7,
  kAffine = 8,
  kSoftmax = 9,
};

const char *ComponentTypeName(ComponentType type);

/// One named parameter block.  Blocks of a component are stored back to back
/// in the listed order, each row-major.
struct ParamShape {
  std::string name;
  int32 rows = 0;
  int32 cols = 0;
  /// Constant initial value; random uniform init when empty.
  std::optional<double> init_value;

  int64 Size() const { return static_cast<int64>(rows) * cols; }
};

/// Per-invocation activations recorded by Propagate for Backpropagate.
struct LayerState {
  virtual ~LayerState() = default;
};

/// A layer over a batch of streams.  Sequence data is a (T*S) x D matrix in
/// which row t*S + s holds time step t of stream s.  Components are
/// immutable; parameters and gradients live in caller-owned flat buffers.
class Component {
 public:
  virtual ~Component() = default;

  virtual ComponentType Type() const = 0;
  int32 InputDim() const { return input_dim_; }
  int32 OutputDim() const { return output_dim_; }

  virtual std::vector<ParamShape> ParamShapes() const { return {}; }
  int64 NumParams() const;

  /// Uniform in [-scale, scale] for weights, constants where ParamShape says.
  void InitParams(std::span<double> params, std::mt19937_64 &rng, double scale) const;

  /// Geometry written to checkpoints.
  virtual std::vector<uint32> Dims() const = 0;

  virtual std::unique_ptr<LayerState> Propagate(std::span<const double> params,
                                                const Matrix &in, int32 num_streams,
                                                Matrix *out) const = 0;

  /// Accumulates parameter gradients into `grad` and writes the input
  /// gradient to `in_diff` (skipped when null).
  virtual void Backpropagate(std::span<const double> params, const LayerState *state,
                             const Matrix &in, const Matrix &out, const Matrix &out_diff,
                             int32 num_streams, Matrix *in_diff,
                             std::span<double> grad) const = 0;

 protected:
  Component(int32 input_dim, int32 output_dim)
      : input_dim_(input_dim), output_dim_(output_dim) {}

  void CheckInput(const Matrix &in, int32 num_streams) const;
  void CheckParams(std::span<const double> params) const;

  template <typename State>
  static const State &CastState(const LayerState *state, const char *who) {
    const State *s = dynamic_cast<const State *>(state);
    if (s == nullptr)
      throw Error(StrCat(who, ": Backpropagate called without a recorded forward state"));
    return *s;
  }

 private:
  int32 input_dim_;
  int32 output_dim_;
};

}  // namespace crnn

#endif  // CRNN_LAYER_COMPONENT_H_
