// crnn/binary-io.h

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

// Little-endian primitives shared by the feature and checkpoint formats.

#ifndef CRNN_BINARY_IO_H_
#define CRNN_BINARY_IO_H_

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "crnn/base.h"

namespace crnn {

template <typename T>
void WriteLE(std::ostream &os, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (size_t i = 0; i < sizeof(T) / 2; i++) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  os.write(reinterpret_cast<const char *>(bytes), sizeof(T));
}

template <typename T>
T ReadLE(std::istream &is, const char *what) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char *>(bytes), sizeof(T)))
    throw FormatError(StrCat("truncated file while reading ", what));
  if constexpr (std::endian::native == std::endian::big) {
    for (size_t i = 0; i < sizeof(T) / 2; i++) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

inline void ExpectMagic(std::istream &is, const char (&magic)[5]) {
  char buf[4];
  if (!is.read(buf, 4)) throw FormatError("truncated file while reading magic");
  if (std::memcmp(buf, magic, 4) != 0)
    throw FormatError(StrCat("bad magic, expected \"", magic, "\""));
}

}  // namespace crnn

#endif  // CRNN_BINARY_IO_H_
