// crnn/arch-spec.cc

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

#include "crnn/arch-spec.h"

#include <cctype>
#include <climits>

#include "json.hpp"

namespace crnn {

const char *LayerKindName(LayerKind kind) {
  switch (kind) {
    case LayerKind::kReLU: return "ReLU";
    case LayerKind::kMaxout: return "Maxout";
    case LayerKind::kRnn: return "Rnn";
    case LayerKind::kLstm: return "Lstm";
    case LayerKind::kLstmP: return "LstmP";
    case LayerKind::kConv: return "Conv";
    case LayerKind::kPooling: return "Pooling";
    case LayerKind::kCLstm: return "CLstm";
    case LayerKind::kCLstmP: return "CLstmP";
  }
  return "?";
}

bool IsPatchLayer(LayerKind kind) {
  return kind == LayerKind::kConv || kind == LayerKind::kCLstm || kind == LayerKind::kCLstmP;
}

bool IsRecurrent(LayerKind kind) {
  return kind == LayerKind::kRnn || kind == LayerKind::kLstm || kind == LayerKind::kLstmP ||
         kind == LayerKind::kCLstm || kind == LayerKind::kCLstmP;
}

namespace {

class ArchParser {
 public:
  explicit ArchParser(const std::string &text) : text_(text) {}

  std::vector<LayerSpec> Parse() {
    std::vector<LayerSpec> layers = ParseArch();
    SkipSpace();
    if (pos_ != text_.size()) Fail("expected '+' or end of input");
    return layers;
  }

 private:
  [[noreturn]] void Fail(const std::string &msg) const { throw ParseError(msg, pos_); }

  void SkipSpace() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) pos_++;
  }

  bool Peek(char c) {
    SkipSpace();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  bool PeekDigit() {
    SkipSpace();
    return pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]));
  }

  // Case-insensitive keyword match; does not consume on failure.
  bool Keyword(const char *word) {
    SkipSpace();
    size_t k = 0;
    for (; word[k] != '\0'; k++) {
      if (pos_ + k >= text_.size()) return false;
      if (std::tolower(static_cast<unsigned char>(text_[pos_ + k])) !=
          std::tolower(static_cast<unsigned char>(word[k])))
        return false;
    }
    pos_ += k;
    return true;
  }

  int32 Number(const char *what) {
    if (!PeekDigit()) Fail(StrCat("expected ", what));
    const size_t start = pos_;
    int64 v = 0;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      v = v * 10 + (text_[pos_] - '0');
      if (v > INT32_MAX) {
        pos_ = start;
        Fail(StrCat(what, " too large"));
      }
      pos_++;
    }
    if (v == 0) {
      pos_ = start;
      Fail(StrCat(what, " must be positive"));
    }
    return static_cast<int32>(v);
  }

  bool RepeatMark() {
    SkipSpace();
    if (Keyword("\xC3\x97")) return true;  // U+00D7 MULTIPLICATION SIGN
    if (pos_ < text_.size() && (text_[pos_] == 'x' || text_[pos_] == 'X' || text_[pos_] == '*')) {
      pos_++;
      return true;
    }
    return false;
  }

  std::vector<LayerSpec> ParseArch() {
    std::vector<LayerSpec> layers = ParseTerm();
    while (Peek('+')) {
      pos_++;
      auto more = ParseTerm();
      layers.insert(layers.end(), more.begin(), more.end());
    }
    return layers;
  }

  std::vector<LayerSpec> ParseTerm() {
    int32 count = 1;
    bool counted = false;
    if (PeekDigit()) {
      count = Number("repeat count");
      if (!RepeatMark()) Fail("expected '×' or 'x' after repeat count");
      counted = true;
    }
    if (Peek('(')) {
      pos_++;
      std::vector<LayerSpec> inner = ParseArch();
      if (!Peek(')')) Fail("expected ')'");
      pos_++;
      std::vector<LayerSpec> out;
      for (int32 k = 0; k < count; k++) out.insert(out.end(), inner.begin(), inner.end());
      return out;
    }
    LayerSpec layer = ParseLayer();
    if (counted) layer.repeat *= count;
    return {layer};
  }

  LayerSpec ParseLayer() {
    SkipSpace();
    LayerSpec layer;
    const size_t start = pos_;
    if (Keyword("CLstm")) {
      layer.kind = LayerKind::kCLstm;
      layer.size = Number("cell count");
      if (Keyword("P")) {
        layer.kind = LayerKind::kCLstmP;
        layer.projection = Number("projection size");
      }
    } else if (Keyword("Conv")) {
      layer.kind = LayerKind::kConv;
      if (PeekDigit()) layer.size = Number("filter count");
    } else if (Keyword("Pooling")) {
      layer.kind = LayerKind::kPooling;
      if (PeekDigit()) layer.size = Number("pool size");
    } else if (Keyword("ReLU")) {
      layer.kind = LayerKind::kReLU;
      layer.size = Number("unit count");
      if (Keyword("G")) {
        pos_ = start;
        Fail("group size is only valid for Maxout");
      }
    } else if (Keyword("Maxout")) {
      layer.kind = LayerKind::kMaxout;
      layer.size = Number("unit count");
      if (!Keyword("G")) Fail("Maxout needs a group size, e.g. Maxout800G3");
      layer.group_size = Number("group size");
    } else if (Keyword("Lstm")) {
      layer.kind = LayerKind::kLstm;
      layer.size = Number("cell count");
      if (Keyword("P")) {
        layer.kind = LayerKind::kLstmP;
        layer.projection = Number("projection size");
      }
    } else if (Keyword("Rnn")) {
      layer.kind = LayerKind::kRnn;
      layer.size = Number("unit count");
    } else {
      Fail("expected a layer (ReLU, Maxout, Rnn, Lstm, CLstm, Conv, Pooling) or '('");
    }
    return layer;
  }

  const std::string &text_;
  size_t pos_ = 0;
};

void CheckLayerOrder(const std::vector<LayerSpec> &layers) {
  if (layers.empty()) return;
  bool banded = true;  // current representation still has frequency structure
  LayerKind prev = LayerKind::kReLU;
  for (size_t k = 0; k < layers.size(); k++) {
    const LayerSpec &l = layers[k];
    const char *name = LayerKindName(l.kind);
    if (l.repeat < 1) throw SpecError(StrCat(name, ": repeat must be >= 1"));
    if (l.size < 0 || (l.size == 0 && l.kind != LayerKind::kConv && l.kind != LayerKind::kPooling))
      throw SpecError(StrCat(name, ": size must be positive"));
    const bool projected = l.kind == LayerKind::kLstmP || l.kind == LayerKind::kCLstmP;
    if (projected != l.projection.has_value())
      throw SpecError(StrCat(name, ": projection is only valid for LstmP/CLstmP"));
    if (l.projection && *l.projection <= 0) throw SpecError("projection must be positive");
    if ((l.kind == LayerKind::kMaxout) != l.group_size.has_value())
      throw SpecError(StrCat(name, ": group size is required for, and only valid for, Maxout"));
    if (l.group_size && *l.group_size <= 0) throw SpecError("group size must be positive");
    if (l.geometry && !IsPatchLayer(l.kind))
      throw SpecError(StrCat(name, ": patch geometry only applies to Conv/CLstm"));

    if (l.kind == LayerKind::kPooling) {
      if (k == 0 || !IsPatchLayer(prev))
        throw SpecError("Pooling must directly follow a Conv or CLstm layer");
      if (l.repeat != 1) throw SpecError("Pooling cannot be repeated");
    } else if (IsPatchLayer(l.kind)) {
      if (!banded)
        throw SpecError(StrCat(name, " needs band-structured input but follows a ",
                               LayerKindName(prev), " layer"));
    } else {
      banded = false;
    }
    prev = l.kind;
  }
}

}  // namespace

std::vector<LayerSpec> ParseArch(const std::string &text) {
  std::vector<LayerSpec> layers = ArchParser(text).Parse();
  CheckLayerOrder(layers);
  return layers;
}

std::string RenderArch(const std::vector<LayerSpec> &layers) {
  std::string out;
  for (const auto &l : layers) {
    if (!out.empty()) out += " + ";
    if (l.repeat > 1) out += StrCat(l.repeat, "x");
    switch (l.kind) {
      case LayerKind::kReLU: out += StrCat("ReLU", l.size); break;
      case LayerKind::kMaxout: out += StrCat("Maxout", l.size, "G", l.group_size.value_or(1)); break;
      case LayerKind::kRnn: out += StrCat("Rnn", l.size); break;
      case LayerKind::kLstm: out += StrCat("Lstm", l.size); break;
      case LayerKind::kLstmP: out += StrCat("Lstm", l.size, "P", l.projection.value_or(0)); break;
      case LayerKind::kCLstm: out += StrCat("CLstm", l.size); break;
      case LayerKind::kCLstmP: out += StrCat("CLstm", l.size, "P", l.projection.value_or(0)); break;
      case LayerKind::kConv: out += l.size > 0 ? StrCat("Conv", l.size) : "Conv"; break;
      case LayerKind::kPooling: out += l.size > 0 ? StrCat("Pooling", l.size) : "Pooling"; break;
    }
  }
  return out;
}

void ValidateSpec(const NetworkSpec &spec) {
  CheckLayerOrder(spec.layers);
  const InputSpec &in = spec.input;
  if (in.bands <= 0 || in.channels <= 0 || in.context < 0)
    throw SpecError(StrCat("bad input descriptor: bands ", in.bands, " channels ", in.channels,
                           " context ", in.context));
  if (spec.num_classes <= 0) throw SpecError("num_classes must be positive");
  const GeometryDefaults &g = spec.geometry;
  if (g.patch_size <= 0 || g.stride <= 0 || g.stacked_patch_size <= 0 ||
      g.stacked_stride <= 0 || g.pool_size <= 0 || g.conv_filters <= 0)
    throw SpecError("geometry defaults must be positive");
  for (const auto &l : spec.layers) {
    if (IsPatchLayer(l.kind) && in.context > 0)
      throw SpecError(StrCat(LayerKindName(l.kind),
                             " takes the current frame only; context window must be 0, got ",
                             in.context));
  }
}

int32 DefaultContext(const std::vector<LayerSpec> &layers) {
  for (const auto &l : layers)
    if (IsRecurrent(l.kind) || IsPatchLayer(l.kind) || l.kind == LayerKind::kPooling) return 0;
  return 5;
}

namespace {

using nlohmann::json;

LayerKind KindFromName(const std::string &name) {
  for (LayerKind k : {LayerKind::kReLU, LayerKind::kMaxout, LayerKind::kRnn, LayerKind::kLstm,
                      LayerKind::kLstmP, LayerKind::kConv, LayerKind::kPooling,
                      LayerKind::kCLstm, LayerKind::kCLstmP})
    if (name == LayerKindName(k)) return k;
  throw SpecError("unknown layer kind \"" + name + "\"");
}

}  // namespace

std::string SpecToJson(const NetworkSpec &spec) {
  json j;
  j["input"] = {{"bands", spec.input.bands},
                {"channels", spec.input.channels},
                {"context", spec.input.context}};
  j["num_classes"] = spec.num_classes;
  const GeometryDefaults &g = spec.geometry;
  j["defaults"] = {{"patch_size", g.patch_size},
                   {"patch_stride", g.stride},
                   {"stacked_patch_size", g.stacked_patch_size},
                   {"stacked_patch_stride", g.stacked_stride},
                   {"pool_size", g.pool_size},
                   {"conv_filters", g.conv_filters}};
  j["layers"] = json::array();
  for (const auto &l : spec.layers) {
    json jl = {{"kind", LayerKindName(l.kind)}, {"size", l.size}, {"repeat", l.repeat}};
    if (l.projection) jl["projection"] = *l.projection;
    if (l.group_size) jl["group_size"] = *l.group_size;
    if (l.geometry)
      jl["geometry"] = {{"patch_size", l.geometry->patch_size}, {"stride", l.geometry->stride}};
    j["layers"].push_back(jl);
  }
  return j.dump(2);
}

NetworkSpec SpecFromJson(const std::string &json_text) {
  NetworkSpec spec;
  try {
    const json j = json::parse(json_text);
    if (j.contains("input")) {
      const json &in = j.at("input");
      spec.input.bands = in.value("bands", spec.input.bands);
      spec.input.channels = in.value("channels", spec.input.channels);
      spec.input.context = in.value("context", spec.input.context);
    }
    spec.num_classes = j.value("num_classes", spec.num_classes);
    if (j.contains("defaults")) {
      const json &d = j.at("defaults");
      GeometryDefaults &g = spec.geometry;
      g.patch_size = d.value("patch_size", g.patch_size);
      g.stride = d.value("patch_stride", g.stride);
      g.stacked_patch_size = d.value("stacked_patch_size", g.stacked_patch_size);
      g.stacked_stride = d.value("stacked_patch_stride", g.stacked_stride);
      g.pool_size = d.value("pool_size", g.pool_size);
      g.conv_filters = d.value("conv_filters", g.conv_filters);
    }
    if (j.contains("arch") && j.contains("layers"))
      throw SpecError("give either \"arch\" or \"layers\", not both");
    if (j.contains("arch")) {
      spec.layers = ParseArch(j.at("arch").get<std::string>());
    } else {
      for (const json &jl : j.at("layers")) {
        LayerSpec l;
        l.kind = KindFromName(jl.at("kind").get<std::string>());
        l.size = jl.value("size", 0);
        l.repeat = jl.value("repeat", 1);
        if (jl.contains("projection")) l.projection = jl.at("projection").get<int32>();
        if (jl.contains("group_size")) l.group_size = jl.at("group_size").get<int32>();
        if (jl.contains("geometry")) {
          const json &g = jl.at("geometry");
          l.geometry = PatchGeometry{g.at("patch_size").get<int32>(), g.value("stride", 1)};
        }
        spec.layers.push_back(l);
      }
    }
  } catch (const json::exception &e) {
    throw SpecError(StrCat("bad network spec JSON: ", e.what()));
  }
  ValidateSpec(spec);
  return spec;
}

}  // namespace crnn
