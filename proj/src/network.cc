// crnn/network.cc

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

#include "crnn/network.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "crnn/binary-io.h"

namespace crnn {

namespace {

// What the next layer sees: a flat vector, or positions x channels.
struct Representation {
  int32 dim = 0;
  bool banded = false;
  bool raw_input = false;  // still the filterbank frame
  int32 positions = 0;
  int32 channels = 0;
  bool channel_major = false;
};

}  // namespace

Network::Network(const NetworkSpec &spec) : spec_(spec) {
  ValidateSpec(spec_);
  const GeometryDefaults &defaults = spec_.geometry;
  Representation rep;
  rep.dim = spec_.input.Dim();
  if (spec_.input.context == 0) {
    rep.banded = true;
    rep.raw_input = true;
    rep.positions = spec_.input.bands;
    rep.channels = spec_.input.channels;
    rep.channel_major = true;
  }

  for (const LayerSpec &l : spec_.layers) {
    for (int32 r = 0; r < l.repeat; r++) {
      std::unique_ptr<Component> c;
      switch (l.kind) {
        case LayerKind::kReLU: c = std::make_unique<ReluLayer>(rep.dim, l.size); break;
        case LayerKind::kMaxout:
          c = std::make_unique<MaxoutLayer>(rep.dim, l.size, *l.group_size);
          break;
        case LayerKind::kRnn: c = std::make_unique<RnnLayer>(rep.dim, l.size); break;
        case LayerKind::kLstm:
        case LayerKind::kLstmP:
          c = std::make_unique<LstmLayer>(rep.dim, l.size, l.projection.value_or(0));
          break;
        case LayerKind::kConv:
        case LayerKind::kCLstm:
        case LayerKind::kCLstmP: {
          if (!rep.banded)
            throw SpecError(StrCat(LayerKindName(l.kind), " cannot follow a flat ",
                                   rep.dim, "-dim representation"));
          PatchGeometry g = rep.raw_input
                                ? PatchGeometry{defaults.patch_size, defaults.stride}
                                : PatchGeometry{defaults.stacked_patch_size, defaults.stacked_stride};
          if (l.geometry) g = *l.geometry;
          const PatchLayout layout{rep.positions, rep.channels, g.patch_size, g.stride,
                                   rep.channel_major};
          int32 out_channels;
          if (l.kind == LayerKind::kConv) {
            out_channels = l.size > 0 ? l.size : defaults.conv_filters;
            c = std::make_unique<ConvLayer>(layout, out_channels);
          } else {
            c = std::make_unique<ClstmLayer>(layout, l.size, l.projection.value_or(0));
            out_channels = l.projection.value_or(l.size);
          }
          rep.positions = layout.NumPatches();
          rep.channels = out_channels;
          rep.channel_major = false;
          rep.raw_input = false;
          break;
        }
        case LayerKind::kPooling: {
          const int32 pool = l.size > 0 ? l.size : defaults.pool_size;
          auto pool_layer = std::make_unique<MaxPoolLayer>(rep.positions, rep.channels, pool);
          rep.positions = pool_layer->NumGroups();
          c = std::move(pool_layer);
          break;
        }
      }
      rep.dim = c->OutputDim();
      if (!IsPatchLayer(l.kind) && l.kind != LayerKind::kPooling) {
        rep.banded = false;
        rep.raw_input = false;
      }
      components_.push_back(std::move(c));
    }
  }
  components_.push_back(std::make_unique<AffineLayer>(rep.dim, spec_.num_classes));
  components_.push_back(std::make_unique<SoftmaxLayer>(spec_.num_classes));

  offsets_.push_back(0);
  for (const auto &c : components_) offsets_.push_back(offsets_.back() + c->NumParams());
}

std::span<const double> Network::ComponentParams(const ParameterSet &params, int32 c) const {
  CRNN_CHECK_DIM(static_cast<int64>(params.Size()) == NumParams(), "parameter set has ",
                 params.Size(), " values, network needs ", NumParams());
  return std::span<const double>(params.values).subspan(
      offsets_[c], offsets_[c + 1] - offsets_[c]);
}

std::span<double> Network::ComponentParams(ParameterSet *params, int32 c) const {
  CRNN_CHECK_DIM(static_cast<int64>(params->Size()) == NumParams(), "parameter set has ",
                 params->Size(), " values, network needs ", NumParams());
  return std::span<double>(params->values).subspan(offsets_[c], offsets_[c + 1] - offsets_[c]);
}

std::vector<ParamBlockInfo> Network::Blocks() const {
  std::vector<ParamBlockInfo> blocks;
  for (int32 c = 0; c < NumComponents(); c++) {
    int64 offset = offsets_[c];
    for (const ParamShape &shape : components_[c]->ParamShapes()) {
      blocks.push_back({c, ComponentTypeName(components_[c]->Type()), shape.name, offset,
                        shape.rows, shape.cols});
      offset += shape.Size();
    }
  }
  return blocks;
}

ParameterSet Network::InitParams(uint64 seed, double scale) const {
  ParameterSet params;
  params.values.assign(static_cast<size_t>(NumParams()), 0.0);
  std::mt19937_64 rng(seed);
  for (int32 c = 0; c < NumComponents(); c++)
    components_[c]->InitParams(ComponentParams(&params, c), rng, scale);
  return params;
}

Matrix Network::Forward(const ParameterSet &params, const Matrix &in, int32 num_streams,
                        NetworkTape *tape) const {
  CRNN_CHECK_DIM(in.cols() == InputDim(), "network input dim ", in.cols(), " != ",
                 InputDim());
  if (tape != nullptr) {
    tape->num_streams = num_streams;
    tape->activations.assign(1, in);
    tape->states.clear();
  }
  Matrix current = in, next;
  for (int32 c = 0; c < NumComponents(); c++) {
    auto state = components_[c]->Propagate(ComponentParams(params, c), current, num_streams,
                                            &next);
    current.swap(next);
    if (tape != nullptr) {
      tape->activations.push_back(current);
      tape->states.push_back(std::move(state));
    }
  }
  return current;
}

void Network::Backward(const ParameterSet &params, const NetworkTape &tape,
                       const Matrix &posterior_diff, ParameterSet *grad,
                       Matrix *in_diff) const {
  if (static_cast<int32>(tape.states.size()) != NumComponents())
    throw Error("Backward called without a recorded forward pass");
  CRNN_CHECK_DIM(static_cast<int64>(grad->Size()) == NumParams(), "gradient buffer has ",
                 grad->Size(), " values, network needs ", NumParams());
  Matrix diff = posterior_diff, next;
  for (int32 c = NumComponents() - 1; c >= 0; c--) {
    Matrix *target = (c > 0 || in_diff != nullptr) ? &next : nullptr;
    components_[c]->Backpropagate(ComponentParams(params, c), tape.states[c].get(),
                                  tape.activations[c], tape.activations[c + 1], diff,
                                  tape.num_streams, target, ComponentParams(grad, c));
    if (target != nullptr) diff.swap(next);
  }
  if (in_diff != nullptr) *in_diff = diff;
}

int64 CountParams(const NetworkSpec &spec) { return Network(spec).NumParams(); }

std::string FormatWithCommas(int64 n) {
  std::string digits = std::to_string(n < 0 ? -n : n);
  std::string out;
  for (size_t k = 0; k < digits.size(); k++) {
    if (k > 0 && (digits.size() - k) % 3 == 0) out += ',';
    out += digits[k];
  }
  return n < 0 ? "-" + out : out;
}

std::string FormatMillions(int64 n) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1fM", static_cast<double>(n) / 1e6);
  return buf;
}

Matrix PosteriorToPseudoLikelihood(const Matrix &posteriors, const Vector &priors) {
  CRNN_CHECK_DIM(priors.size() == posteriors.cols(), "prior length ", priors.size(),
                 " != number of classes ", posteriors.cols());
  if ((priors.array() <= 0.0).any()) throw Error("priors must be positive");
  if (std::abs(priors.sum() - 1.0) > 1e-6) throw Error("priors must sum to 1");
  const RowVector log_prior = priors.array().log().transpose();
  Matrix out = posteriors.cwiseMax(kLogFloor).array().log();
  out.rowwise() -= log_prior;
  return out;
}

Vector ComputePriors(const std::vector<AlignmentSequence> &alignments, int32 num_classes) {
  Vector counts = Vector::Ones(num_classes);
  for (const auto &ali : alignments) {
    for (int32 l : ali.labels) {
      if (l < 0 || l >= num_classes)
        throw Error(StrCat("label ", l, " of ", ali.utterance_id, " outside [0, ", num_classes,
                           ")"));
      counts[l] += 1.0;
    }
  }
  return counts / counts.sum();
}

namespace {
constexpr uint32 kCheckpointVersion = 1;
}

void WriteCheckpoint(const std::string &path, const Network &net, const ParameterSet &params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write " + path);
  os.write("CRNP", 4);
  WriteLE<uint32>(os, kCheckpointVersion);
  WriteLE<uint32>(os, static_cast<uint32>(net.NumComponents()));
  for (int32 c = 0; c < net.NumComponents(); c++) {
    const Component &comp = net.GetComponent(c);
    WriteLE<uint32>(os, static_cast<uint32>(comp.Type()));
    const auto dims = comp.Dims();
    WriteLE<uint32>(os, static_cast<uint32>(dims.size()));
    for (uint32 d : dims) WriteLE<uint32>(os, d);
    const auto block = net.ComponentParams(params, c);
    WriteLE<uint64>(os, block.size());
    for (double v : block) WriteLE<double>(os, v);
  }
  if (!os) throw Error("write failed: " + path);
}

ParameterSet ReadCheckpoint(const std::string &path, const Network &net) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  ExpectMagic(is, "CRNP");
  const uint32 version = ReadLE<uint32>(is, "version");
  if (version != kCheckpointVersion)
    throw FormatError(StrCat("unsupported checkpoint version ", version));
  const uint32 count = ReadLE<uint32>(is, "component count");
  if (count != static_cast<uint32>(net.NumComponents()))
    throw FormatError(StrCat(path, ": ", count, " components, network has ",
                             net.NumComponents()));
  ParameterSet params;
  params.values.resize(static_cast<size_t>(net.NumParams()));
  for (int32 c = 0; c < net.NumComponents(); c++) {
    const Component &comp = net.GetComponent(c);
    const uint32 tag = ReadLE<uint32>(is, "component tag");
    if (tag != static_cast<uint32>(comp.Type()))
      throw FormatError(StrCat(path, ": component ", c, " is tag ", tag, ", expected ",
                               ComponentTypeName(comp.Type())));
    const uint32 num_dims = ReadLE<uint32>(is, "dim count");
    std::vector<uint32> dims(num_dims);
    for (auto &d : dims) d = ReadLE<uint32>(is, "dims");
    if (dims != comp.Dims())
      throw FormatError(StrCat(path, ": component ", c, " (", ComponentTypeName(comp.Type()),
                               ") has different dimensions"));
    const uint64 size = ReadLE<uint64>(is, "parameter count");
    auto block = net.ComponentParams(&params, c);
    if (size != block.size())
      throw FormatError(StrCat(path, ": component ", c, " stores ", size,
                               " parameters, expected ", block.size()));
    for (double &v : block) v = ReadLE<double>(is, "parameters");
  }
  return params;
}

}  // namespace crnn
