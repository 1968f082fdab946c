// crnn/base.h

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

#ifndef CRNN_BASE_H_
#define CRNN_BASE_H_

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace crnn {

using int32 = std::int32_t;
using int64 = std::int64_t;
using uint32 = std::uint32_t;
using uint64 = std::uint64_t;

// All activation buffers are row-major so that a (N*J) x K matrix and an
// N x (J*K) matrix share the same memory layout.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

using FloatMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes of two operands do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Architecture string could not be parsed; `position` is a 0-based offset.
class ParseError : public Error {
 public:
  ParseError(const std::string &msg, size_t position)
      : Error(msg + " at position " + std::to_string(position)),
        position_(position) {}
  size_t Position() const { return position_; }

 private:
  size_t position_;
};

/// Architecture is syntactically fine but cannot be wired.
class SpecError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss or gradient.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string &msg, int64 step)
      : Error(msg + " (step " + std::to_string(step) + ")"), step_(step) {}
  int64 Step() const { return step_; }

 private:
  int64 step_;
};

namespace internal {
inline void StreamAll(std::ostringstream &) {}
template <typename T, typename... Rest>
void StreamAll(std::ostringstream &os, const T &v, const Rest &...rest) {
  os << v;
  StreamAll(os, rest...);
}
}  // namespace internal

template <typename... Args>
std::string StrCat(const Args &...args) {
  std::ostringstream os;
  internal::StreamAll(os, args...);
  return os.str();
}

#define CRNN_CHECK_DIM(cond, ...)                                   \
  do {                                                              \
    if (!(cond)) throw ::crnn::DimensionError(::crnn::StrCat(__VA_ARGS__)); \
  } while (0)

}  // namespace crnn

#endif  // CRNN_BASE_H_
