// crnn/arch-spec.h

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

// Declarative network description and the architecture-string grammar
//
//   arch  := term ("+" term)*
//   term  := [count ("×" | "x")] group
//   group := "(" arch ")" | layer
//   layer := ("ReLU" | "Maxout") size ["G" gsize] | ("Lstm" | "CLstm") size ["P" proj]
//          | "Rnn" size | "Conv" [filters] | "Pooling" [pool]
//
// e.g. "CLstm384P256 + Pooling + Lstm2000P750 + 3×ReLU2000".  Keywords are
// case-insensitive and whitespace is ignored.

#ifndef CRNN_ARCH_SPEC_H_
#define CRNN_ARCH_SPEC_H_

#include <optional>
#include <string>
#include <vector>

#include "crnn/base.h"

namespace crnn {

enum class LayerKind { kReLU, kMaxout, kRnn, kLstm, kLstmP, kConv, kPooling, kCLstm, kCLstmP };

const char *LayerKindName(LayerKind kind);
bool IsPatchLayer(LayerKind kind);
bool IsRecurrent(LayerKind kind);

struct PatchGeometry {
  int32 patch_size = 0;
  int32 stride = 1;
  bool operator==(const PatchGeometry &) const = default;
};

struct LayerSpec {
  LayerKind kind = LayerKind::kReLU;
  /// Units; filters for Conv and pool width for Pooling (0: default).
  int32 size = 0;
  std::optional<int32> projection;
  std::optional<int32> group_size;
  int32 repeat = 1;
  std::optional<PatchGeometry> geometry;

  bool operator==(const LayerSpec &) const = default;
};

struct InputSpec {
  int32 bands = 33;
  int32 channels = 3;
  /// Frames of context on each side; 0 means the current frame only.
  int32 context = 0;

  int32 FrameDim() const { return bands * channels; }
  int32 Dim() const { return FrameDim() * (2 * context + 1); }
  bool operator==(const InputSpec &) const = default;
};

/// Patch geometry used when a layer does not override it.  The first patch
/// layer slides over filterbank bands; later ones slide over the outputs of
/// the layer below (one position per patch or pooled group).
struct GeometryDefaults {
  int32 patch_size = 10;
  int32 stride = 1;
  int32 stacked_patch_size = 3;
  int32 stacked_stride = 1;
  int32 pool_size = 3;
  int32 conv_filters = 256;
  bool operator==(const GeometryDefaults &) const = default;
};

struct NetworkSpec {
  InputSpec input;
  std::vector<LayerSpec> layers;
  int32 num_classes = 5529;
  GeometryDefaults geometry;

  bool operator==(const NetworkSpec &) const = default;
};

/// Parses an architecture string into its hidden layers.  Throws ParseError
/// with the offending offset on syntax errors and SpecError on semantic ones
/// (e.g. Pooling without a preceding patch layer).
std::vector<LayerSpec> ParseArch(const std::string &text);

/// Canonical string form: layers joined by " + ", repeats as "3xReLU2000".
/// Geometry overrides are not representable and are dropped.
std::string RenderArch(const std::vector<LayerSpec> &layers);

/// Checks the layer-order rules against the input; throws SpecError.
void ValidateSpec(const NetworkSpec &spec);

/// Context used when none is given: +-5 frames for purely fully connected
/// stacks, none for anything recurrent or convolutional.
int32 DefaultContext(const std::vector<LayerSpec> &layers);

/// JSON form of a spec (see docs/network-spec.md).
std::string SpecToJson(const NetworkSpec &spec);
NetworkSpec SpecFromJson(const std::string &json_text);

}  // namespace crnn

#endif  // CRNN_ARCH_SPEC_H_
