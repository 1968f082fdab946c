// crnn/lstm-cell.cc

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

#include "crnn/lstm-cell.h"

#include <cmath>

namespace crnn {

namespace {

using ArrayRef = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowVector>;
using RowMap = Eigen::Map<RowVector>;

template <typename Derived>
ArrayRef Sigmoid(const Eigen::ArrayBase<Derived> &x) {
  return 1.0 / (1.0 + (-x).exp());
}

// Offsets of the LSTM blocks inside a flat parameter buffer.
struct LstmLayout {
  int32 d, n, r, p;
  int64 wx, wh, peep, bias, proj, total;

  explicit LstmLayout(const LstmDims &dims)
      : d(dims.input), n(dims.cells), r(dims.OutputDim()), p(dims.projection) {
    wx = 0;
    wh = wx + 4LL * n * d;
    peep = wh + 4LL * n * r;
    bias = peep + 3LL * n;
    proj = bias + 4LL * n;
    total = proj + static_cast<int64>(p) * n;
  }
};

void CheckDims(const LstmDims &dims) {
  if (dims.input <= 0 || dims.cells <= 0 || dims.projection < 0)
    throw DimensionError(StrCat("bad LSTM dims: input ", dims.input, " cells ", dims.cells,
                                " projection ", dims.projection));
}

}  // namespace

std::vector<ParamShape> LstmParamShapes(const LstmDims &dims) {
  CheckDims(dims);
  const int32 d = dims.input, n = dims.cells, r = dims.OutputDim();
  std::vector<ParamShape> shapes = {
      {"W_xi", n, d, {}}, {"W_xf", n, d, {}}, {"W_xc", n, d, {}}, {"W_xo", n, d, {}},
      {"W_hi", n, r, {}}, {"W_hf", n, r, {}}, {"W_hc", n, r, {}}, {"W_ho", n, r, {}},
      {"W_ci", 1, n, {}}, {"W_cf", 1, n, {}}, {"W_co", 1, n, {}},
      {"b_i", 1, n, 0.0}, {"b_f", 1, n, 1.0}, {"b_c", 1, n, 0.0}, {"b_o", 1, n, 0.0},
  };
  if (dims.projection > 0) shapes.push_back({"W_proj", dims.projection, n, {}});
  return shapes;
}

int64 LstmNumParams(const LstmDims &dims) { return LstmLayout(dims).total; }

void LstmForward(const LstmDims &dims, std::span<const double> params, const Matrix &in,
                 int32 rows, Matrix *out, LstmState *state, const Matrix *init_output,
                 const Matrix *init_cells) {
  CheckDims(dims);
  const LstmLayout L(dims);
  const int32 n = L.n, r = L.r;
  CRNN_CHECK_DIM(static_cast<int64>(params.size()) == L.total, "LSTM expects ", L.total,
                 " parameters, got ", params.size());
  CRNN_CHECK_DIM(in.cols() == L.d, "LSTM input dim ", in.cols(), " != ", L.d);
  CRNN_CHECK_DIM(rows > 0 && in.rows() % rows == 0, "LSTM input rows ", in.rows(),
                 " not a multiple of ", rows);
  const int32 steps = static_cast<int32>(in.rows() / rows);

  const double *base = params.data();
  ConstMatrixMap wx(base + L.wx, 4 * n, L.d);
  ConstMatrixMap wh(base + L.wh, 4 * n, r);
  ConstRowMap w_ci(base + L.peep, n), w_cf(base + L.peep + n, n), w_co(base + L.peep + 2 * n, n);
  ConstRowMap bias(base + L.bias, 4 * n);

  state->rows = rows;
  state->steps = steps;
  state->init_output = init_output ? *init_output : Matrix::Zero(rows, r);
  state->init_cells = init_cells ? *init_cells : Matrix::Zero(rows, n);
  CRNN_CHECK_DIM(state->init_output.rows() == rows && state->init_output.cols() == r,
                 "LSTM initial output must be ", rows, " x ", r);
  CRNN_CHECK_DIM(state->init_cells.rows() == rows && state->init_cells.cols() == n,
                 "LSTM initial cells must be ", rows, " x ", n);

  Matrix z_in = in * wx.transpose();
  z_in.rowwise() += bias;

  state->gates.resize(in.rows(), 4 * n);
  state->cells.resize(in.rows(), n);
  state->hidden.resize(in.rows(), n);
  state->output.resize(in.rows(), r);

  Matrix z(rows, 4 * n);
  for (int32 t = 0; t < steps; t++) {
    const auto r_prev = t == 0 ? state->init_output.middleRows(0, rows)
                               : state->output.middleRows((t - 1) * rows, rows);
    const auto c_prev = t == 0 ? state->init_cells.middleRows(0, rows)
                               : state->cells.middleRows((t - 1) * rows, rows);
    z = z_in.middleRows(t * rows, rows);
    z.noalias() += r_prev * wh.transpose();

    auto g = state->gates.middleRows(t * rows, rows);
    auto c = state->cells.middleRows(t * rows, rows);
    auto h = state->hidden.middleRows(t * rows, rows);

    g.leftCols(n).array() = Sigmoid(z.leftCols(n).array() + c_prev.array().rowwise() * w_ci.array());
    g.middleCols(n, n).array() =
        Sigmoid(z.middleCols(n, n).array() + c_prev.array().rowwise() * w_cf.array());
    g.middleCols(2 * n, n).array() = z.middleCols(2 * n, n).array().tanh();
    c = g.middleCols(n, n).cwiseProduct(c_prev) +
        g.leftCols(n).cwiseProduct(g.middleCols(2 * n, n));
    g.rightCols(n).array() = Sigmoid(z.rightCols(n).array() + c.array().rowwise() * w_co.array());
    h.array() = g.rightCols(n).array() * c.array().tanh();

    if (dims.projection > 0) {
      ConstMatrixMap w_proj(base + L.proj, dims.projection, n);
      state->output.middleRows(t * rows, rows).noalias() = h * w_proj.transpose();
    } else {
      state->output.middleRows(t * rows, rows) = h;
    }
  }
  *out = state->output;
}

void LstmBackward(const LstmDims &dims, std::span<const double> params,
                  const LstmState &state, const Matrix &in, const Matrix &out_diff,
                  Matrix *in_diff, std::span<double> grad) {
  const LstmLayout L(dims);
  const int32 n = L.n, r = L.r, rows = state.rows, steps = state.steps;
  CRNN_CHECK_DIM(static_cast<int64>(grad.size()) == L.total, "LSTM gradient buffer size ",
                 grad.size(), " != ", L.total);
  CRNN_CHECK_DIM(out_diff.rows() == in.rows() && out_diff.cols() == r &&
                     in.rows() == static_cast<Eigen::Index>(steps) * rows,
                 "LSTM backward shape mismatch");

  const double *base = params.data();
  ConstMatrixMap wx(base + L.wx, 4 * n, L.d);
  ConstMatrixMap wh(base + L.wh, 4 * n, r);
  ConstRowMap w_ci(base + L.peep, n), w_cf(base + L.peep + n, n), w_co(base + L.peep + 2 * n, n);

  double *gbase = grad.data();
  MatrixMap d_wx(gbase + L.wx, 4 * n, L.d);
  MatrixMap d_wh(gbase + L.wh, 4 * n, r);
  RowMap d_ci(gbase + L.peep, n), d_cf(gbase + L.peep + n, n), d_co(gbase + L.peep + 2 * n, n);
  RowMap d_bias(gbase + L.bias, 4 * n);

  Matrix dz(in.rows(), 4 * n);
  Matrix dr_next = Matrix::Zero(rows, r);
  Matrix dc_next = Matrix::Zero(rows, n);
  Matrix dr(rows, r), dh(rows, n), dc(rows, n);

  for (int32 t = steps - 1; t >= 0; t--) {
    const auto c_prev = t == 0 ? state.init_cells.middleRows(0, rows)
                               : state.cells.middleRows((t - 1) * rows, rows);
    const auto g = state.gates.middleRows(t * rows, rows);
    const auto c = state.cells.middleRows(t * rows, rows);
    const ArrayRef i = g.leftCols(n).array();
    const ArrayRef f = g.middleCols(n, n).array();
    const ArrayRef a = g.middleCols(2 * n, n).array();
    const ArrayRef o = g.rightCols(n).array();

    dr = out_diff.middleRows(t * rows, rows) + dr_next;
    if (dims.projection > 0) {
      ConstMatrixMap w_proj(base + L.proj, dims.projection, n);
      MatrixMap d_proj(gbase + L.proj, dims.projection, n);
      d_proj.noalias() += dr.transpose() * state.hidden.middleRows(t * rows, rows);
      dh.noalias() = dr * w_proj;
    } else {
      dh = dr;
    }

    const ArrayRef tanh_c = c.array().tanh();
    auto dzo = dz.block(t * rows, 3 * n, rows, n);
    auto dzi = dz.block(t * rows, 0, rows, n);
    auto dzf = dz.block(t * rows, n, rows, n);
    auto dza = dz.block(t * rows, 2 * n, rows, n);

    dzo.array() = dh.array() * tanh_c * o * (1.0 - o);
    dc.array() = dh.array() * o * (1.0 - tanh_c.square()) + dzo.array().rowwise() * w_co.array() +
         dc_next.array();
    dzi.array() = dc.array() * a * i * (1.0 - i);
    dza.array() = dc.array() * i * (1.0 - a.square());
    dzf.array() = dc.array() * c_prev.array() * f * (1.0 - f);

    dc_next.array() = dc.array() * f + dzi.array().rowwise() * w_ci.array() +
              dzf.array().rowwise() * w_cf.array();
    dr_next.noalias() = dz.middleRows(t * rows, rows) * wh;

    d_ci += dzi.cwiseProduct(c_prev).colwise().sum();
    d_cf += dzf.cwiseProduct(c_prev).colwise().sum();
    d_co += dzo.cwiseProduct(c).colwise().sum();
  }

  Matrix r_prev(in.rows(), r);
  r_prev.topRows(rows) = state.init_output;
  if (steps > 1) r_prev.bottomRows((steps - 1) * rows) = state.output.topRows((steps - 1) * rows);

  d_wx.noalias() += dz.transpose() * in;
  d_wh.noalias() += dz.transpose() * r_prev;
  d_bias += dz.colwise().sum();
  if (in_diff != nullptr) *in_diff = dz * wx;
}

LstmStepResult LstmStep(const LstmDims &dims, std::span<const double> params,
                        const Vector &x, const Vector &output_prev, const Vector &cells_prev) {
  CRNN_CHECK_DIM(x.size() == dims.input, "x has dim ", x.size(), ", expected ", dims.input);
  CRNN_CHECK_DIM(output_prev.size() == dims.OutputDim(), "previous output has dim ",
                 output_prev.size(), ", expected ", dims.OutputDim());
  CRNN_CHECK_DIM(cells_prev.size() == dims.cells, "previous cells have dim ",
                 cells_prev.size(), ", expected ", dims.cells);
  const Matrix in = x.transpose();
  const Matrix r0 = output_prev.transpose();
  const Matrix c0 = cells_prev.transpose();
  LstmState state;
  Matrix out;
  LstmForward(dims, params, in, 1, &out, &state, &r0, &c0);
  return {out.row(0).transpose(), state.hidden.row(0).transpose(),
          state.cells.row(0).transpose()};
}

std::vector<ParamShape> RnnParamShapes(const RnnDims &dims) {
  if (dims.input <= 0 || dims.hidden <= 0)
    throw DimensionError(StrCat("bad RNN dims ", dims.input, " x ", dims.hidden));
  return {{"W_xh", dims.hidden, dims.input, {}},
          {"W_hh", dims.hidden, dims.hidden, {}},
          {"b_h", 1, dims.hidden, 0.0}};
}

void RnnForward(const RnnDims &dims, std::span<const double> params, const Matrix &in,
                int32 rows, Matrix *out, RnnState *state, const Matrix *init_output) {
  const int32 d = dims.input, n = dims.hidden;
  const int64 total = static_cast<int64>(n) * d + static_cast<int64>(n) * n + n;
  CRNN_CHECK_DIM(static_cast<int64>(params.size()) == total, "RNN expects ", total,
                 " parameters, got ", params.size());
  CRNN_CHECK_DIM(in.cols() == d, "RNN input dim ", in.cols(), " != ", d);
  CRNN_CHECK_DIM(rows > 0 && in.rows() % rows == 0, "RNN input rows ", in.rows(),
                 " not a multiple of ", rows);
  const int32 steps = static_cast<int32>(in.rows() / rows);
  ConstMatrixMap w_xh(params.data(), n, d);
  ConstMatrixMap w_hh(params.data() + static_cast<int64>(n) * d, n, n);
  ConstRowMap b_h(params.data() + static_cast<int64>(n) * (d + n), n);

  state->rows = rows;
  state->steps = steps;
  state->init_output = init_output ? *init_output : Matrix::Zero(rows, n);
  CRNN_CHECK_DIM(state->init_output.rows() == rows && state->init_output.cols() == n,
                 "RNN initial state must be ", rows, " x ", n);
  Matrix z_in = in * w_xh.transpose();
  z_in.rowwise() += b_h;
  state->output.resize(in.rows(), n);
  for (int32 t = 0; t < steps; t++) {
    const auto h_prev = t == 0 ? state->init_output.middleRows(0, rows)
                               : state->output.middleRows((t - 1) * rows, rows);
    Matrix z = z_in.middleRows(t * rows, rows);
    z.noalias() += h_prev * w_hh.transpose();
    state->output.middleRows(t * rows, rows).array() = z.array().tanh();
  }
  *out = state->output;
}

void RnnBackward(const RnnDims &dims, std::span<const double> params, const RnnState &state,
                 const Matrix &in, const Matrix &out_diff, Matrix *in_diff,
                 std::span<double> grad) {
  const int32 d = dims.input, n = dims.hidden, rows = state.rows, steps = state.steps;
  CRNN_CHECK_DIM(out_diff.rows() == in.rows() && out_diff.cols() == n,
                 "RNN backward shape mismatch");
  ConstMatrixMap w_xh(params.data(), n, d);
  ConstMatrixMap w_hh(params.data() + static_cast<int64>(n) * d, n, n);
  MatrixMap d_xh(grad.data(), n, d);
  MatrixMap d_hh(grad.data() + static_cast<int64>(n) * d, n, n);
  RowMap d_b(grad.data() + static_cast<int64>(n) * (d + n), n);

  Matrix dz(in.rows(), n);
  Matrix dh_next = Matrix::Zero(rows, n);
  for (int32 t = steps - 1; t >= 0; t--) {
    const ArrayRef h = state.output.middleRows(t * rows, rows).array();
    dz.middleRows(t * rows, rows).array() =
        (out_diff.middleRows(t * rows, rows) + dh_next).array() * (1.0 - h.square());
    dh_next.noalias() = dz.middleRows(t * rows, rows) * w_hh;
  }
  Matrix h_prev(in.rows(), n);
  h_prev.topRows(rows) = state.init_output;
  if (steps > 1) h_prev.bottomRows((steps - 1) * rows) = state.output.topRows((steps - 1) * rows);
  d_xh.noalias() += dz.transpose() * in;
  d_hh.noalias() += dz.transpose() * h_prev;
  d_b += dz.colwise().sum();
  if (in_diff != nullptr) *in_diff = dz * w_xh;
}

Vector RnnStep(const RnnDims &dims, std::span<const double> params, const Vector &x,
               const Vector &h_prev) {
  CRNN_CHECK_DIM(x.size() == dims.input, "x has dim ", x.size(), ", expected ", dims.input);
  CRNN_CHECK_DIM(h_prev.size() == dims.hidden, "h_prev has dim ", h_prev.size(),
                 ", expected ", dims.hidden);
  const Matrix in = x.transpose();
  const Matrix h0 = h_prev.transpose();
  RnnState state;
  Matrix out;
  RnnForward(dims, params, in, 1, &out, &state, &h0);
  return out.row(0).transpose();
}

}  // namespace crnn
