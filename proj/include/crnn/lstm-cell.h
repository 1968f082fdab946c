// crnn/lstm-cell.h

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

// Recurrent cores shared by the full-frame and per-patch layers.  A core
// runs `rows` independent sequences in lock step; the input is a
// (T*rows) x d matrix with row t*rows + k holding step t of sequence k.
//
// LSTM memory block with peepholes (c_{t-1} feeds i and f, c_t feeds o):
//   i = sigm(W_xi x + W_hi r' + w_ci * c' + b_i)
//   f = sigm(W_xf x + W_hf r' + w_cf * c' + b_f)
//   a = tanh(W_xc x + W_hc r' + b_c)
//   c = f * c' + i * a
//   o = sigm(W_xo x + W_ho r' + w_co * c + b_o)
//   h = o * tanh(c),  r = W_proj h  (r = h without projection)
// where primes denote the previous step and r is both the output and the
// recurrent feedback.

#ifndef CRNN_LSTM_CELL_H_
#define CRNN_LSTM_CELL_H_

#include <span>
#include <vector>

#include "crnn/layer-component.h"

namespace crnn {

struct LstmDims {
  int32 input = 0;
  int32 cells = 0;
  int32 projection = 0;  // 0: no projection

  int32 OutputDim() const { return projection > 0 ? projection : cells; }
};

/// Blocks in storage order: W_xi W_xf W_xc W_xo (n x d), W_hi W_hf W_hc W_ho
/// (n x r), W_ci W_cf W_co (1 x n), b_i b_f b_c b_o (1 x n), W_proj (p x n).
std::vector<ParamShape> LstmParamShapes(const LstmDims &dims);
int64 LstmNumParams(const LstmDims &dims);

struct LstmState : LayerState {
  int32 rows = 0;
  int32 steps = 0;
  Matrix gates;   // (T*rows) x 4n, post-activation [i f a o]
  Matrix cells;   // (T*rows) x n
  Matrix hidden;  // (T*rows) x n, h before projection
  Matrix output;  // (T*rows) x r
  Matrix init_output;  // rows x r
  Matrix init_cells;   // rows x n
};

/// Runs the LSTM over `in`.  Initial state defaults to zero.
void LstmForward(const LstmDims &dims, std::span<const double> params, const Matrix &in,
                 int32 rows, Matrix *out, LstmState *state,
                 const Matrix *init_output = nullptr, const Matrix *init_cells = nullptr);

/// Gradients w.r.t. input (optional) and parameters (accumulated).
void LstmBackward(const LstmDims &dims, std::span<const double> params,
                  const LstmState &state, const Matrix &in, const Matrix &out_diff,
                  Matrix *in_diff, std::span<double> grad);

struct LstmStepResult {
  Vector output;  // r_t, equal to h_t without projection
  Vector hidden;  // h_t
  Vector cells;   // c_t
};

/// One step of one sequence; `output_prev` is the previous r (or h).
LstmStepResult LstmStep(const LstmDims &dims, std::span<const double> params,
                        const Vector &x, const Vector &output_prev, const Vector &cells_prev);

/// Vanilla tanh recurrence h = tanh(W_xh x + W_hh h' + b_h).
struct RnnDims {
  int32 input = 0;
  int32 hidden = 0;
};

std::vector<ParamShape> RnnParamShapes(const RnnDims &dims);

struct RnnState : LayerState {
  int32 rows = 0;
  int32 steps = 0;
  Matrix output;
  Matrix init_output;
};

void RnnForward(const RnnDims &dims, std::span<const double> params, const Matrix &in,
                int32 rows, Matrix *out, RnnState *state,
                const Matrix *init_output = nullptr);
void RnnBackward(const RnnDims &dims, std::span<const double> params, const RnnState &state,
                 const Matrix &in, const Matrix &out_diff, Matrix *in_diff,
                 std::span<double> grad);

Vector RnnStep(const RnnDims &dims, std::span<const double> params, const Vector &x,
               const Vector &h_prev);

}  // namespace crnn

#endif  // CRNN_LSTM_CELL_H_
