// crnn/layers.cc

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

#include "crnn/layers.h"

#include <algorithm>
#include <cmath>

namespace crnn {

const char *ComponentTypeName(ComponentType type) {
  switch (type) {
    case ComponentType::kRnn: return "Rnn";
    case ComponentType::kLstm: return "Lstm";
    case ComponentType::kConv: return "Conv";
    case ComponentType::kClstm: return "CLstm";
    case ComponentType::kMaxPool: return "Pooling";
    case ComponentType::kRelu: return "ReLU";
    case ComponentType::kMaxout: return "Maxout";
    case ComponentType::kAffine: return "Affine";
    case ComponentType::kSoftmax: return "Softmax";
  }
  return "Unknown";
}

int64 Component::NumParams() const {
  int64 total = 0;
  for (const auto &shape : ParamShapes()) total += shape.Size();
  return total;
}

void Component::InitParams(std::span<double> params, std::mt19937_64 &rng,
                           double scale) const {
  CheckParams(params);
  std::uniform_real_distribution<double> uniform(-scale, scale);
  size_t offset = 0;
  for (const auto &shape : ParamShapes()) {
    for (int64 k = 0; k < shape.Size(); k++, offset++)
      params[offset] = shape.init_value ? *shape.init_value : uniform(rng);
  }
}

void Component::CheckInput(const Matrix &in, int32 num_streams) const {
  CRNN_CHECK_DIM(in.cols() == input_dim_, ComponentTypeName(Type()), ": input dim ",
                 in.cols(), " != ", input_dim_);
  CRNN_CHECK_DIM(num_streams > 0 && in.rows() % num_streams == 0, ComponentTypeName(Type()),
                 ": ", in.rows(), " rows is not a multiple of ", num_streams, " streams");
}

void Component::CheckParams(std::span<const double> params) const {
  CRNN_CHECK_DIM(static_cast<int64>(params.size()) == NumParams(), ComponentTypeName(Type()),
                 ": expected ", NumParams(), " parameters, got ", params.size());
}

namespace {

using RowMap = Eigen::Map<RowVector>;
using ConstRowMap = Eigen::Map<const RowVector>;

// Reinterprets an R x (J*K) row-major matrix as (R*J) x K and back.
Matrix Reshape(const Matrix &m, Eigen::Index rows, Eigen::Index cols) {
  return ConstMatrixMap(m.data(), rows, cols);
}

}  // namespace

// PatchLayout.

int32 PatchLayout::NumPatches() const {
  if (num_positions <= 0 || channels <= 0 || patch_size <= 0 || stride <= 0)
    throw SpecError(StrCat("bad patch layout: positions ", num_positions, " channels ",
                           channels, " patch ", patch_size, " stride ", stride));
  if (patch_size > num_positions)
    throw SpecError(StrCat("patch size ", patch_size, " exceeds ", num_positions,
                           " positions"));
  return (num_positions - patch_size) / stride + 1;
}

std::vector<int32> PatchLayout::GatherIndices() const {
  const int32 num_patches = NumPatches();
  std::vector<int32> indices;
  indices.reserve(static_cast<size_t>(num_patches) * PatchDim());
  for (int32 j = 0; j < num_patches; j++) {
    std::vector<int32> cols;
    for (int32 q = 0; q < patch_size; q++)
      for (int32 c = 0; c < channels; c++) cols.push_back(SourceColumn(j * stride + q, c));
    std::sort(cols.begin(), cols.end());
    indices.insert(indices.end(), cols.begin(), cols.end());
  }
  return indices;
}

Matrix GatherPatches(const Matrix &in, const PatchLayout &layout,
                     const std::vector<int32> &indices) {
  const int32 patch_dim = layout.PatchDim();
  const int32 num_patches = static_cast<int32>(indices.size()) / patch_dim;
  CRNN_CHECK_DIM(in.cols() == layout.InputDim(), "patch input dim ", in.cols(), " != ",
                 layout.InputDim());
  Matrix out(in.rows() * num_patches, patch_dim);
  for (Eigen::Index r = 0; r < in.rows(); r++) {
    const double *src = in.row(r).data();
    for (int32 j = 0; j < num_patches; j++) {
      double *dst = out.row(r * num_patches + j).data();
      const int32 *idx = indices.data() + static_cast<size_t>(j) * patch_dim;
      for (int32 e = 0; e < patch_dim; e++) dst[e] = src[idx[e]];
    }
  }
  return out;
}

Matrix ScatterPatches(const Matrix &patches, const PatchLayout &layout,
                      const std::vector<int32> &indices) {
  const int32 patch_dim = layout.PatchDim();
  const int32 num_patches = static_cast<int32>(indices.size()) / patch_dim;
  CRNN_CHECK_DIM(patches.cols() == patch_dim && patches.rows() % num_patches == 0,
                 "patch gradient shape mismatch");
  const Eigen::Index rows = patches.rows() / num_patches;
  Matrix out = Matrix::Zero(rows, layout.InputDim());
  for (Eigen::Index r = 0; r < rows; r++) {
    double *dst = out.row(r).data();
    for (int32 j = 0; j < num_patches; j++) {
      const double *src = patches.row(r * num_patches + j).data();
      const int32 *idx = indices.data() + static_cast<size_t>(j) * patch_dim;
      for (int32 e = 0; e < patch_dim; e++) dst[idx[e]] += src[e];
    }
  }
  return out;
}

// RnnLayer.

RnnLayer::RnnLayer(int32 input_dim, int32 hidden)
    : Component(input_dim, hidden), dims_{input_dim, hidden} {
  RnnParamShapes(dims_);
}

std::vector<uint32> RnnLayer::Dims() const {
  return {static_cast<uint32>(dims_.input), static_cast<uint32>(dims_.hidden)};
}

std::unique_ptr<LayerState> RnnLayer::Propagate(std::span<const double> params,
                                                const Matrix &in, int32 num_streams,
                                                Matrix *out) const {
  CheckInput(in, num_streams);
  auto state = std::make_unique<RnnState>();
  RnnForward(dims_, params, in, num_streams, out, state.get());
  return state;
}

void RnnLayer::Backpropagate(std::span<const double> params, const LayerState *state,
                             const Matrix &in, const Matrix &, const Matrix &out_diff, int32,
                             Matrix *in_diff, std::span<double> grad) const {
  RnnBackward(dims_, params, CastState<RnnState>(state, "Rnn"), in, out_diff, in_diff, grad);
}

// LstmLayer.

LstmLayer::LstmLayer(int32 input_dim, int32 cells, int32 projection)
    : Component(input_dim, projection > 0 ? projection : cells),
      dims_{input_dim, cells, projection} {
  LstmParamShapes(dims_);
}

std::vector<uint32> LstmLayer::Dims() const {
  return {static_cast<uint32>(dims_.input), static_cast<uint32>(dims_.cells),
          static_cast<uint32>(dims_.projection)};
}

std::unique_ptr<LayerState> LstmLayer::Propagate(std::span<const double> params,
                                                 const Matrix &in, int32 num_streams,
                                                 Matrix *out) const {
  CheckInput(in, num_streams);
  auto state = std::make_unique<LstmState>();
  LstmForward(dims_, params, in, num_streams, out, state.get());
  return state;
}

void LstmLayer::Backpropagate(std::span<const double> params, const LayerState *state,
                              const Matrix &in, const Matrix &, const Matrix &out_diff, int32,
                              Matrix *in_diff, std::span<double> grad) const {
  LstmBackward(dims_, params, CastState<LstmState>(state, "Lstm"), in, out_diff, in_diff,
               grad);
}

// ConvLayer.

namespace {

struct ConvState : LayerState {
  Matrix patches;
};

std::vector<uint32> LayoutDims(const PatchLayout &layout) {
  return {static_cast<uint32>(layout.num_positions), static_cast<uint32>(layout.channels),
          static_cast<uint32>(layout.patch_size), static_cast<uint32>(layout.stride),
          layout.channel_major ? 1u : 0u};
}

}  // namespace

ConvLayer::ConvLayer(const PatchLayout &layout, int32 num_filters)
    : Component(layout.InputDim(), layout.NumPatches() * num_filters),
      layout_(layout),
      num_patches_(layout.NumPatches()),
      num_filters_(num_filters),
      gather_(layout.GatherIndices()) {
  if (num_filters <= 0) throw SpecError("Conv needs at least one filter");
}

std::vector<ParamShape> ConvLayer::ParamShapes() const {
  return {{"W", num_filters_, layout_.PatchDim(), {}}, {"b", 1, num_filters_, 0.0}};
}

std::vector<uint32> ConvLayer::Dims() const {
  auto dims = LayoutDims(layout_);
  dims.push_back(static_cast<uint32>(num_filters_));
  return dims;
}

std::unique_ptr<LayerState> ConvLayer::Propagate(std::span<const double> params,
                                                 const Matrix &in, int32 num_streams,
                                                 Matrix *out) const {
  CheckInput(in, num_streams);
  CheckParams(params);
  ConstMatrixMap w(params.data(), num_filters_, layout_.PatchDim());
  ConstRowMap b(params.data() + w.size(), num_filters_);
  auto state = std::make_unique<ConvState>();
  state->patches = GatherPatches(in, layout_, gather_);
  Matrix z = state->patches * w.transpose();
  z.rowwise() += b;
  z = z.cwiseMax(0.0);
  *out = Reshape(z, in.rows(), OutputDim());
  return state;
}

void ConvLayer::Backpropagate(std::span<const double> params, const LayerState *state,
                              const Matrix &in, const Matrix &out, const Matrix &out_diff,
                              int32, Matrix *in_diff, std::span<double> grad) const {
  const auto &s = CastState<ConvState>(state, "Conv");
  ConstMatrixMap w(params.data(), num_filters_, layout_.PatchDim());
  MatrixMap dw(grad.data(), num_filters_, layout_.PatchDim());
  RowMap db(grad.data() + w.size(), num_filters_);
  const Eigen::Index rows = in.rows() * num_patches_;
  Matrix dz = Reshape(out_diff, rows, num_filters_);
  const Matrix y = Reshape(out, rows, num_filters_);
  dz = (y.array() > 0.0).select(dz, 0.0);
  dw.noalias() += dz.transpose() * s.patches;
  db += dz.colwise().sum();
  if (in_diff != nullptr) *in_diff = ScatterPatches(dz * w, layout_, gather_);
}

// ClstmLayer.

namespace {

struct ClstmState : LayerState {
  Matrix patches;
  LstmState lstm;
};

}  // namespace

ClstmLayer::ClstmLayer(const PatchLayout &layout, int32 cells, int32 projection)
    : Component(layout.InputDim(),
                layout.NumPatches() * (projection > 0 ? projection : cells)),
      layout_(layout),
      num_patches_(layout.NumPatches()),
      dims_{layout.PatchDim(), cells, projection},
      gather_(layout.GatherIndices()) {
  LstmParamShapes(dims_);
}

std::vector<uint32> ClstmLayer::Dims() const {
  auto dims = LayoutDims(layout_);
  dims.push_back(static_cast<uint32>(dims_.cells));
  dims.push_back(static_cast<uint32>(dims_.projection));
  return dims;
}

std::unique_ptr<LayerState> ClstmLayer::Propagate(std::span<const double> params,
                                                  const Matrix &in, int32 num_streams,
                                                  Matrix *out) const {
  CheckInput(in, num_streams);
  auto state = std::make_unique<ClstmState>();
  state->patches = GatherPatches(in, layout_, gather_);
  Matrix y;
  LstmForward(dims_, params, state->patches, num_streams * num_patches_, &y, &state->lstm);
  *out = Reshape(y, in.rows(), OutputDim());
  return state;
}

void ClstmLayer::Backpropagate(std::span<const double> params, const LayerState *state,
                               const Matrix &in, const Matrix &, const Matrix &out_diff, int32,
                               Matrix *in_diff, std::span<double> grad) const {
  const auto &s = CastState<ClstmState>(state, "CLstm");
  const Matrix dy = Reshape(out_diff, in.rows() * num_patches_, dims_.OutputDim());
  Matrix d_patches;
  LstmBackward(dims_, params, s.lstm, s.patches, dy, in_diff ? &d_patches : nullptr, grad);
  if (in_diff != nullptr) *in_diff = ScatterPatches(d_patches, layout_, gather_);
}

ClstmStepResult ClstmStep(const ClstmLayer &layer, std::span<const double> params,
                          const Vector &frame, const Matrix &output_prev,
                          const Matrix &cells_prev) {
  const int32 num_patches = layer.NumPatches();
  const LstmDims &dims = layer.LstmDimensions();
  CRNN_CHECK_DIM(frame.size() == layer.InputDim(), "frame dim ", frame.size(), " != ",
                 layer.InputDim());
  CRNN_CHECK_DIM(output_prev.rows() == num_patches && output_prev.cols() == dims.OutputDim(),
                 "previous output must be ", num_patches, " x ", dims.OutputDim());
  CRNN_CHECK_DIM(cells_prev.rows() == num_patches && cells_prev.cols() == dims.cells,
                 "previous cells must be ", num_patches, " x ", dims.cells);
  const Matrix in = frame.transpose();
  const Matrix patches =
      GatherPatches(in, layer.Layout(), layer.Layout().GatherIndices());
  LstmState state;
  Matrix y;
  LstmForward(dims, params, patches, num_patches, &y, &state, &output_prev, &cells_prev);
  return {y, state.cells};
}

// MaxPoolLayer.

MaxPoolLayer::MaxPoolLayer(int32 num_positions, int32 channels, int32 pool_size)
    : Component(num_positions * channels,
                ((num_positions + std::max(pool_size, 1) - 1) / std::max(pool_size, 1)) *
                    channels),
      num_positions_(num_positions),
      channels_(channels),
      pool_size_(pool_size),
      num_groups_((num_positions + std::max(pool_size, 1) - 1) / std::max(pool_size, 1)) {
  if (pool_size < 1) throw SpecError("pool size must be >= 1");
  if (num_positions < 1 || channels < 1) throw SpecError("pooling over an empty layout");
}

std::vector<uint32> MaxPoolLayer::Dims() const {
  return {static_cast<uint32>(num_positions_), static_cast<uint32>(channels_),
          static_cast<uint32>(pool_size_)};
}

std::unique_ptr<LayerState> MaxPoolLayer::Propagate(std::span<const double>,
                                                    const Matrix &in, int32 num_streams,
                                                    Matrix *out) const {
  CheckInput(in, num_streams);
  auto state = std::make_unique<MaxPoolState>();
  out->resize(in.rows(), OutputDim());
  state->argmax.resize(static_cast<size_t>(in.rows()) * OutputDim());
  for (Eigen::Index r = 0; r < in.rows(); r++) {
    for (int32 g = 0; g < num_groups_; g++) {
      const int32 first = g * pool_size_;
      const int32 last = std::min(first + pool_size_, num_positions_);
      for (int32 k = 0; k < channels_; k++) {
        int32 best = first * channels_ + k;
        for (int32 p = first + 1; p < last; p++) {
          const int32 col = p * channels_ + k;
          if (in(r, col) > in(r, best)) best = col;
        }
        (*out)(r, g * channels_ + k) = in(r, best);
        state->argmax[static_cast<size_t>(r) * OutputDim() + g * channels_ + k] = best;
      }
    }
  }
  return state;
}

void MaxPoolLayer::Backpropagate(std::span<const double>, const LayerState *state,
                                 const Matrix &in, const Matrix &, const Matrix &out_diff,
                                 int32, Matrix *in_diff, std::span<double>) const {
  const auto &s = CastState<MaxPoolState>(state, "Pooling");
  if (in_diff == nullptr) return;
  *in_diff = Matrix::Zero(in.rows(), in.cols());
  for (Eigen::Index r = 0; r < in.rows(); r++)
    for (int32 o = 0; o < OutputDim(); o++)
      (*in_diff)(r, s.argmax[static_cast<size_t>(r) * OutputDim() + o]) += out_diff(r, o);
}

// Fully connected layers.

namespace {

struct EmptyState : LayerState {};

void AffineForward(std::span<const double> params, int32 in_dim, int32 out_dim,
                   const Matrix &in, Matrix *z) {
  ConstMatrixMap w(params.data(), out_dim, in_dim);
  ConstRowMap b(params.data() + w.size(), out_dim);
  z->noalias() = in * w.transpose();
  z->rowwise() += b;
}

void AffineBackward(std::span<const double> params, int32 in_dim, int32 out_dim,
                    const Matrix &in, const Matrix &dz, Matrix *in_diff,
                    std::span<double> grad) {
  ConstMatrixMap w(params.data(), out_dim, in_dim);
  MatrixMap dw(grad.data(), out_dim, in_dim);
  RowMap db(grad.data() + w.size(), out_dim);
  dw.noalias() += dz.transpose() * in;
  db += dz.colwise().sum();
  if (in_diff != nullptr) *in_diff = dz * w;
}

}  // namespace

ReluLayer::ReluLayer(int32 input_dim, int32 output_dim) : Component(input_dim, output_dim) {
  if (input_dim <= 0 || output_dim <= 0) throw SpecError("ReLU layer with empty dims");
}

std::vector<ParamShape> ReluLayer::ParamShapes() const {
  return {{"W", OutputDim(), InputDim(), {}}, {"b", 1, OutputDim(), 0.0}};
}

std::vector<uint32> ReluLayer::Dims() const {
  return {static_cast<uint32>(InputDim()), static_cast<uint32>(OutputDim())};
}

std::unique_ptr<LayerState> ReluLayer::Propagate(std::span<const double> params,
                                                 const Matrix &in, int32 num_streams,
                                                 Matrix *out) const {
  CheckInput(in, num_streams);
  CheckParams(params);
  AffineForward(params, InputDim(), OutputDim(), in, out);
  *out = out->cwiseMax(0.0);
  return std::make_unique<EmptyState>();
}

void ReluLayer::Backpropagate(std::span<const double> params, const LayerState *state,
                              const Matrix &in, const Matrix &out, const Matrix &out_diff,
                              int32, Matrix *in_diff, std::span<double> grad) const {
  CastState<EmptyState>(state, "ReLU");
  const Matrix dz = (out.array() > 0.0).select(out_diff, 0.0);
  AffineBackward(params, InputDim(), OutputDim(), in, dz, in_diff, grad);
}

namespace {

struct MaxoutState : LayerState {
  std::vector<int32> argmax;  // winning pre-activation column per output entry
};

}  // namespace

MaxoutLayer::MaxoutLayer(int32 input_dim, int32 output_dim, int32 group_size)
    : Component(input_dim, output_dim), group_size_(group_size) {
  if (input_dim <= 0 || output_dim <= 0 || group_size <= 0)
    throw SpecError("Maxout layer with empty dims");
}

std::vector<ParamShape> MaxoutLayer::ParamShapes() const {
  return {{"W", OutputDim() * group_size_, InputDim(), {}},
          {"b", 1, OutputDim() * group_size_, 0.0}};
}

std::vector<uint32> MaxoutLayer::Dims() const {
  return {static_cast<uint32>(InputDim()), static_cast<uint32>(OutputDim()),
          static_cast<uint32>(group_size_)};
}

std::unique_ptr<LayerState> MaxoutLayer::Propagate(std::span<const double> params,
                                                   const Matrix &in, int32 num_streams,
                                                   Matrix *out) const {
  CheckInput(in, num_streams);
  CheckParams(params);
  Matrix z;
  AffineForward(params, InputDim(), OutputDim() * group_size_, in, &z);
  auto state = std::make_unique<MaxoutState>();
  state->argmax.resize(static_cast<size_t>(in.rows()) * OutputDim());
  out->resize(in.rows(), OutputDim());
  for (Eigen::Index r = 0; r < in.rows(); r++) {
    for (int32 u = 0; u < OutputDim(); u++) {
      int32 best = u * group_size_;
      for (int32 k = 1; k < group_size_; k++)
        if (z(r, u * group_size_ + k) > z(r, best)) best = u * group_size_ + k;
      (*out)(r, u) = z(r, best);
      state->argmax[static_cast<size_t>(r) * OutputDim() + u] = best;
    }
  }
  return state;
}

void MaxoutLayer::Backpropagate(std::span<const double> params, const LayerState *state,
                                const Matrix &in, const Matrix &, const Matrix &out_diff,
                                int32, Matrix *in_diff, std::span<double> grad) const {
  const auto &s = CastState<MaxoutState>(state, "Maxout");
  Matrix dz = Matrix::Zero(in.rows(), static_cast<Eigen::Index>(OutputDim()) * group_size_);
  for (Eigen::Index r = 0; r < in.rows(); r++)
    for (int32 u = 0; u < OutputDim(); u++)
      dz(r, s.argmax[static_cast<size_t>(r) * OutputDim() + u]) = out_diff(r, u);
  AffineBackward(params, InputDim(), OutputDim() * group_size_, in, dz, in_diff, grad);
}

AffineLayer::AffineLayer(int32 input_dim, int32 output_dim) : Component(input_dim, output_dim) {
  if (input_dim <= 0 || output_dim <= 0) throw SpecError("affine layer with empty dims");
}

std::vector<ParamShape> AffineLayer::ParamShapes() const {
  return {{"W", OutputDim(), InputDim(), {}}, {"b", 1, OutputDim(), 0.0}};
}

std::vector<uint32> AffineLayer::Dims() const {
  return {static_cast<uint32>(InputDim()), static_cast<uint32>(OutputDim())};
}

std::unique_ptr<LayerState> AffineLayer::Propagate(std::span<const double> params,
                                                   const Matrix &in, int32 num_streams,
                                                   Matrix *out) const {
  CheckInput(in, num_streams);
  CheckParams(params);
  AffineForward(params, InputDim(), OutputDim(), in, out);
  return std::make_unique<EmptyState>();
}

void AffineLayer::Backpropagate(std::span<const double> params, const LayerState *state,
                                const Matrix &in, const Matrix &, const Matrix &out_diff,
                                int32, Matrix *in_diff, std::span<double> grad) const {
  CastState<EmptyState>(state, "Affine");
  AffineBackward(params, InputDim(), OutputDim(), in, out_diff, in_diff, grad);
}

SoftmaxLayer::SoftmaxLayer(int32 dim) : Component(dim, dim) {
  if (dim <= 0) throw SpecError("softmax over zero classes");
}

std::vector<uint32> SoftmaxLayer::Dims() const { return {static_cast<uint32>(InputDim())}; }

Matrix SoftmaxRows(const Matrix &logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); r++) {
    const double m = logits.row(r).maxCoeff();
    out.row(r) = (logits.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

std::unique_ptr<LayerState> SoftmaxLayer::Propagate(std::span<const double>, const Matrix &in,
                                                    int32 num_streams, Matrix *out) const {
  CheckInput(in, num_streams);
  *out = SoftmaxRows(in);
  return std::make_unique<EmptyState>();
}

void SoftmaxLayer::Backpropagate(std::span<const double>, const LayerState *state,
                                 const Matrix &, const Matrix &out, const Matrix &out_diff,
                                 int32, Matrix *in_diff, std::span<double>) const {
  CastState<EmptyState>(state, "Softmax");
  if (in_diff == nullptr) return;
  const Vector dot = out.cwiseProduct(out_diff).rowwise().sum();
  *in_diff = out.cwiseProduct(out_diff.colwise() - dot);
}

Vector ReluForward(const Vector &x, const Matrix &w, const Vector &b) {
  CRNN_CHECK_DIM(w.cols() == x.size() && w.rows() == b.size(), "ReLU: W is ", w.rows(), " x ",
                 w.cols(), ", x has ", x.size(), ", b has ", b.size());
  return (w * x + b).cwiseMax(0.0);
}

Vector MaxoutForward(const Vector &x, const Matrix &w, const Vector &b, int32 group_size) {
  CRNN_CHECK_DIM(group_size > 0 && w.rows() % group_size == 0 && w.cols() == x.size() &&
                     w.rows() == b.size(),
                 "Maxout: W is ", w.rows(), " x ", w.cols(), ", x has ", x.size(),
                 ", group ", group_size);
  const Vector z = w * x + b;
  Vector out(z.size() / group_size);
  for (Eigen::Index u = 0; u < out.size(); u++)
    out[u] = z.segment(u * group_size, group_size).maxCoeff();
  return out;
}

Vector SoftmaxForward(const Vector &logits) {
  return SoftmaxRows(Matrix(logits.transpose())).row(0).transpose();
}

std::unique_ptr<Component> MakeComponent(ComponentType type, const std::vector<uint32> &dims) {
  auto need = [&](size_t n) {
    if (dims.size() != n)
      throw FormatError(StrCat(ComponentTypeName(type), " expects ", n, " dims, got ",
                               dims.size()));
  };
  auto i = [&](size_t k) { return static_cast<int32>(dims[k]); };
  auto layout = [&]() {
    return PatchLayout{i(0), i(1), i(2), i(3), dims[4] != 0};
  };
  switch (type) {
    case ComponentType::kRnn: need(2); return std::make_unique<RnnLayer>(i(0), i(1));
    case ComponentType::kLstm: need(3); return std::make_unique<LstmLayer>(i(0), i(1), i(2));
    case ComponentType::kConv: need(6); return std::make_unique<ConvLayer>(layout(), i(5));
    case ComponentType::kClstm:
      need(7);
      return std::make_unique<ClstmLayer>(layout(), i(5), i(6));
    case ComponentType::kMaxPool:
      need(3);
      return std::make_unique<MaxPoolLayer>(i(0), i(1), i(2));
    case ComponentType::kRelu: need(2); return std::make_unique<ReluLayer>(i(0), i(1));
    case ComponentType::kMaxout:
      need(3);
      return std::make_unique<MaxoutLayer>(i(0), i(1), i(2));
    case ComponentType::kAffine: need(2); return std::make_unique<AffineLayer>(i(0), i(1));
    case ComponentType::kSoftmax: need(1); return std::make_unique<SoftmaxLayer>(i(0));
  }
  throw FormatError(StrCat("unknown component tag ", static_cast<uint32>(type)));
}

}  // namespace crnn
