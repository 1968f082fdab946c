// tests/test-util.h

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

#ifndef CRNN_TESTS_TEST_UTIL_H_
#define CRNN_TESTS_TEST_UTIL_H_

#include <filesystem>
#include <random>
#include <span>
#include <string>

#include "crnn/base.h"

namespace crnn {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("crnn-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  std::string Path(const std::string &name = "") const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline Matrix RandomMatrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64 &rng,
                           double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; r++)
    for (Eigen::Index c = 0; c < cols; c++) m(r, c) = g(rng);
  return m;
}

inline void FillRandom(std::span<double> values, std::mt19937_64 &rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double &v : values) v = u(rng);
}

}  // namespace crnn

#endif  // CRNN_TESTS_TEST_UTIL_H_
