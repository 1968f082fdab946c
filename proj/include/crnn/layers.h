// crnn/layers.h

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

#ifndef CRNN_LAYERS_H_
#define CRNN_LAYERS_H_

#include <memory>
#include <vector>

#include "crnn/layer-component.h"
#include "crnn/lstm-cell.h"

namespace crnn {

/// Arrangement of a frame as `num_positions` frequency positions with
/// `channels` values each, cut into overlapping patches of `patch_size`
/// positions.  Filterbank frames are channel-major (column c*P + p); the
/// output of a patch layer is position-major (column p*K + k).
struct PatchLayout {
  int32 num_positions = 0;
  int32 channels = 0;
  int32 patch_size = 0;
  int32 stride = 1;
  bool channel_major = false;

  /// floor((P - s) / stride) + 1; throws SpecError when no patch fits.
  int32 NumPatches() const;
  int32 InputDim() const { return num_positions * channels; }
  int32 PatchDim() const { return patch_size * channels; }
  int32 SourceColumn(int32 position, int32 channel) const {
    return channel_major ? channel * num_positions + position : position * channels + channel;
  }
  /// Source columns of every patch, J blocks of PatchDim() entries.  Within a
  /// patch the columns are increasing, so a single full-width patch is the
  /// identity.
  std::vector<int32> GatherIndices() const;

  bool operator==(const PatchLayout &) const = default;
};

/// (T*S) x P*C frames -> (T*S*J) x s*C patches, row (t*S + s)*J + j.
Matrix GatherPatches(const Matrix &in, const PatchLayout &layout,
                     const std::vector<int32> &indices);
/// Adjoint of GatherPatches.
Matrix ScatterPatches(const Matrix &patches, const PatchLayout &layout,
                      const std::vector<int32> &indices);

class RnnLayer : public Component {
 public:
  RnnLayer(int32 input_dim, int32 hidden);
  ComponentType Type() const override { return ComponentType::kRnn; }
  std::vector<ParamShape> ParamShapes() const override { return RnnParamShapes(dims_); }
  std::vector<uint32> Dims() const override;
  std::unique_ptr<LayerState> Propagate(std::span<const double> params, const Matrix &in,
                                        int32 num_streams, Matrix *out) const override;
  void Backpropagate(std::span<const double> params, const LayerState *state, const Matrix &in,
                     const Matrix &out, const Matrix &out_diff, int32 num_streams,
                     Matrix *in_diff, std::span<double> grad) const override;

 private:
  RnnDims dims_;
};

/// LSTM, or LSTMP when `projection` > 0.
class LstmLayer : public Component {
 public:
  LstmLayer(int32 input_dim, int32 cells, int32 projection);
  ComponentType Type() const override { return ComponentType::kLstm; }
  std::vector<ParamShape> ParamShapes() const override { return LstmParamShapes(dims_); }
  std::vector<uint32> Dims() const override;
  const LstmDims &LstmDimensions() const { return dims_; }
  std::unique_ptr<LayerState> Propagate(std::span<const double> params, const Matrix &in,
                                        int32 num_streams, Matrix *out) const override;
  void Backpropagate(std::span<const double> params, const LayerState *state, const Matrix &in,
                     const Matrix &out, const Matrix &out_diff, int32 num_streams,
                     Matrix *in_diff, std::span<double> grad) const override;

 private:
  LstmDims dims_;
};

/// Frequency convolution: one ReLU filter bank W (K x s*C), b shared by all
/// patches.  Output is J x K per frame, position-major.
class ConvLayer : public Component {
 public:
  ConvLayer(const PatchLayout &layout, int32 num_filters);
  ComponentType Type() const override { return ComponentType::kConv; }
  std::vector<ParamShape> ParamShapes() const override;
  std::vector<uint32> Dims() const override;
  const PatchLayout &Layout() const { return layout_; }
  int32 NumPatches() const { return num_patches_; }
  int32 NumFilters() const { return num_filters_; }
  std::unique_ptr<LayerState> Propagate(std::span<const double> params, const Matrix &in,
                                        int32 num_streams, Matrix *out) const override;
  void Backpropagate(std::span<const double> params, const LayerState *state, const Matrix &in,
                     const Matrix &out, const Matrix &out_diff, int32 num_streams,
                     Matrix *in_diff, std::span<double> grad) const override;

 private:
  PatchLayout layout_;
  int32 num_patches_;
  int32 num_filters_;
  std::vector<int32> gather_;
};

/// Convolutional LSTM: one LSTM(P) shared by all J patches, each patch
/// running its own recurrence along time.  There is no recurrence across
/// patches.  Output is J x r per frame, position-major.
class ClstmLayer : public Component {
 public:
  ClstmLayer(const PatchLayout &layout, int32 cells, int32 projection);
  ComponentType Type() const override { return ComponentType::kClstm; }
  std::vector<ParamShape> ParamShapes() const override { return LstmParamShapes(dims_); }
  std::vector<uint32> Dims() const override;
  const PatchLayout &Layout() const { return layout_; }
  const LstmDims &LstmDimensions() const { return dims_; }
  int32 NumPatches() const { return num_patches_; }
  std::unique_ptr<LayerState> Propagate(std::span<const double> params, const Matrix &in,
                                        int32 num_streams, Matrix *out) const override;
  void Backpropagate(std::span<const double> params, const LayerState *state, const Matrix &in,
                     const Matrix &out, const Matrix &out_diff, int32 num_streams,
                     Matrix *in_diff, std::span<double> grad) const override;

 private:
  PatchLayout layout_;
  int32 num_patches_;
  LstmDims dims_;
  std::vector<int32> gather_;
};

struct ClstmStepResult {
  Matrix output;  // J x r
  Matrix cells;   // J x n
};

/// One time step of a CLSTM on a single frame with per-patch state.
ClstmStepResult ClstmStep(const ClstmLayer &layer, std::span<const double> params,
                          const Vector &frame, const Matrix &output_prev,
                          const Matrix &cells_prev);

/// Max over groups of `pool_size` adjacent positions; the last group may be
/// partial.  Parameter free.
class MaxPoolLayer : public Component {
 public:
  MaxPoolLayer(int32 num_positions, int32 channels, int32 pool_size);
  ComponentType Type() const override { return ComponentType::kMaxPool; }
  std::vector<uint32> Dims() const override;
  int32 NumGroups() const { return num_groups_; }
  int32 Channels() const { return channels_; }
  std::unique_ptr<LayerState> Propagate(std::span<const double> params, const Matrix &in,
                                        int32 num_streams, Matrix *out) const override;
  void Backpropagate(std::span<const double> params, const LayerState *state, const Matrix &in,
                     const Matrix &out, const Matrix &out_diff, int32 num_streams,
                     Matrix *in_diff, std::span<double> grad) const override;

 private:
  int32 num_positions_;
  int32 channels_;
  int32 pool_size_;
  int32 num_groups_;
};

struct MaxPoolState : LayerState {
  std::vector<int32> argmax;  // input column chosen for each output entry
};

class ReluLayer : public Component {
 public:
  ReluLayer(int32 input_dim, int32 output_dim);
  ComponentType Type() const override { return ComponentType::kRelu; }
  std::vector<ParamShape> ParamShapes() const override;
  std::vector<uint32> Dims() const override;
  std::unique_ptr<LayerState> Propagate(std::span<const double> params, const Matrix &in,
                                        int32 num_streams, Matrix *out) const override;
  void Backpropagate(std::span<const double> params, const LayerState *state, const Matrix &in,
                     const Matrix &out, const Matrix &out_diff, int32 num_streams,
                     Matrix *in_diff, std::span<double> grad) const override;
};

/// Output unit u is the max of linear units u*g .. u*g + g - 1.
class MaxoutLayer : public Component {
 public:
  MaxoutLayer(int32 input_dim, int32 output_dim, int32 group_size);
  ComponentType Type() const override { return ComponentType::kMaxout; }
  std::vector<ParamShape> ParamShapes() const override;
  std::vector<uint32> Dims() const override;
  std::unique_ptr<LayerState> Propagate(std::span<const double> params, const Matrix &in,
                                        int32 num_streams, Matrix *out) const override;
  void Backpropagate(std::span<const double> params, const LayerState *state, const Matrix &in,
                     const Matrix &out, const Matrix &out_diff, int32 num_streams,
                     Matrix *in_diff, std::span<double> grad) const override;

 private:
  int32 group_size_;
};

class AffineLayer : public Component {
 public:
  AffineLayer(int32 input_dim, int32 output_dim);
  ComponentType Type() const override { return ComponentType::kAffine; }
  std::vector<ParamShape> ParamShapes() const override;
  std::vector<uint32> Dims() const override;
  std::unique_ptr<LayerState> Propagate(std::span<const double> params, const Matrix &in,
                                        int32 num_streams, Matrix *out) const override;
  void Backpropagate(std::span<const double> params, const LayerState *state, const Matrix &in,
                     const Matrix &out, const Matrix &out_diff, int32 num_streams,
                     Matrix *in_diff, std::span<double> grad) const override;
};

/// Row-wise softmax with max subtraction.
class SoftmaxLayer : public Component {
 public:
  explicit SoftmaxLayer(int32 dim);
  ComponentType Type() const override { return ComponentType::kSoftmax; }
  std::vector<uint32> Dims() const override;
  std::unique_ptr<LayerState> Propagate(std::span<const double> params, const Matrix &in,
                                        int32 num_streams, Matrix *out) const override;
  void Backpropagate(std::span<const double> params, const LayerState *state, const Matrix &in,
                     const Matrix &out, const Matrix &out_diff, int32 num_streams,
                     Matrix *in_diff, std::span<double> grad) const override;
};

/// Stateless helpers matching the single-frame layer operations.
Vector ReluForward(const Vector &x, const Matrix &w, const Vector &b);
Vector MaxoutForward(const Vector &x, const Matrix &w, const Vector &b, int32 group_size);
Vector SoftmaxForward(const Vector &logits);
Matrix SoftmaxRows(const Matrix &logits);

/// Recreates a component from its checkpoint tag and Dims().
std::unique_ptr<Component> MakeComponent(ComponentType type, const std::vector<uint32> &dims);

}  // namespace crnn

#endif  // CRNN_LAYERS_H_
