// crnn/feature-io.cc

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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "crnn/binary-io.h"
#include "crnn/features.h"

namespace crnn {

namespace {

constexpr uint32 kFeatureVersion = 1;

std::ifstream OpenIn(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  return is;
}

std::ofstream OpenOut(const std::string &path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write " + path);
  return os;
}

}  // namespace

void WriteFeatures(const std::string &path, const FeatureSequence &features) {
  features.Check();
  std::ofstream os = OpenOut(path);
  os.write("CRNF", 4);
  WriteLE<uint32>(os, kFeatureVersion);
  WriteLE<uint32>(os, static_cast<uint32>(features.NumFrames()));
  WriteLE<uint32>(os, static_cast<uint32>(features.Dim()));
  WriteLE<uint32>(os, static_cast<uint32>(features.num_bands));
  WriteLE<uint32>(os, static_cast<uint32>(features.num_channels));
  for (Eigen::Index t = 0; t < features.frames.rows(); t++)
    for (Eigen::Index d = 0; d < features.frames.cols(); d++)
      WriteLE<float>(os, features.frames(t, d));
  WriteLE<uint32>(os, static_cast<uint32>(features.utterance_id.size()));
  os.write(features.utterance_id.data(), static_cast<std::streamsize>(features.utterance_id.size()));
  if (!os) throw Error("write failed: " + path);
}

FeatureSequence ReadFeatures(const std::string &path) {
  std::ifstream is = OpenIn(path);
  ExpectMagic(is, "CRNF");
  const uint32 version = ReadLE<uint32>(is, "version");
  if (version != kFeatureVersion)
    throw FormatError(StrCat("unsupported feature file version ", version));
  const uint32 num_frames = ReadLE<uint32>(is, "T");
  const uint32 dim = ReadLE<uint32>(is, "D");
  FeatureSequence seq;
  seq.num_bands = static_cast<int32>(ReadLE<uint32>(is, "F"));
  seq.num_channels = static_cast<int32>(ReadLE<uint32>(is, "C"));
  if (static_cast<uint64>(seq.num_bands) * static_cast<uint64>(seq.num_channels) != dim)
    throw FormatError(StrCat(path, ": D=", dim, " but F x C = ", seq.num_bands, " x ",
                             seq.num_channels));

  // Refuse headers that promise more payload than the file holds before
  // allocating anything.
  const auto here = is.tellg();
  is.seekg(0, std::ios::end);
  const auto remaining = static_cast<uint64>(is.tellg() - here);
  is.seekg(here);
  if (static_cast<uint64>(num_frames) * dim * sizeof(float) > remaining)
    throw FormatError(StrCat(path, ": header declares ", num_frames, " x ", dim,
                             " floats, file is truncated"));

  seq.frames.resize(num_frames, dim);
  for (uint32 t = 0; t < num_frames; t++)
    for (uint32 d = 0; d < dim; d++) seq.frames(t, d) = ReadLE<float>(is, "frames");
  const uint32 id_len = ReadLE<uint32>(is, "utterance id length");
  seq.utterance_id.resize(id_len);
  if (id_len > 0 && !is.read(seq.utterance_id.data(), id_len))
    throw FormatError(path + ": truncated utterance id");
  return seq;
}

void WriteAlignments(const std::string &path,
                     const std::vector<AlignmentSequence> &alignments) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path);
  for (const auto &ali : alignments) {
    os << ali.utterance_id;
    for (int32 l : ali.labels) os << ' ' << l;
    os << '\n';
  }
}

std::vector<AlignmentSequence> ReadAlignments(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  std::vector<AlignmentSequence> out;
  std::string line;
  int64 line_no = 0;
  while (std::getline(is, line)) {
    line_no++;
    std::istringstream ls(line);
    AlignmentSequence ali;
    if (!(ls >> ali.utterance_id)) continue;
    std::string tok;
    while (ls >> tok) {
      size_t used = 0;
      int64 v = -1;
      try {
        v = std::stoll(tok, &used);
      } catch (const std::exception &) {
        used = 0;
      }
      if (used != tok.size() || v < 0 || v > INT32_MAX)
        throw FormatError(StrCat(path, ":", line_no, ": bad label '", tok, "'"));
      ali.labels.push_back(static_cast<int32>(v));
    }
    out.push_back(std::move(ali));
  }
  return out;
}

std::vector<FeatureSequence> ReadFeatureDir(const std::string &dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error("not a directory: " + dir);
  std::vector<std::string> paths;
  for (const auto &entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".crnf")
      paths.push_back(entry.path().string());
  std::sort(paths.begin(), paths.end());
  std::vector<FeatureSequence> out;
  out.reserve(paths.size());
  for (const auto &p : paths) out.push_back(ReadFeatures(p));
  return out;
}

// Minimal RIFF reader: walks chunks until "fmt " and "data" are found.
WaveUtterance ReadWave(const std::string &path, const std::string &utterance_id) {
  std::ifstream is = OpenIn(path);
  ExpectMagic(is, "RIFF");
  ReadLE<uint32>(is, "RIFF size");
  ExpectMagic(is, "WAVE");
  uint16_t format = 0, channels = 0, bits = 0;
  uint32 rate = 0;
  bool have_fmt = false;
  while (true) {
    char id[4];
    if (!is.read(id, 4)) throw FormatError(path + ": no data chunk");
    const uint32 size = ReadLE<uint32>(is, "chunk size");
    const std::string chunk(id, 4);
    if (chunk == "fmt ") {
      format = ReadLE<uint16_t>(is, "format");
      channels = ReadLE<uint16_t>(is, "channels");
      rate = ReadLE<uint32>(is, "sample rate");
      ReadLE<uint32>(is, "byte rate");
      ReadLE<uint16_t>(is, "block align");
      bits = ReadLE<uint16_t>(is, "bits");
      if (size > 16) is.seekg(size - 16, std::ios::cur);
      have_fmt = true;
    } else if (chunk == "data") {
      if (!have_fmt) throw FormatError(path + ": data chunk before fmt chunk");
      if (format != 1 || channels != 1 || bits != 16)
        throw FormatError(path + ": only mono 16-bit PCM is supported");
      if (rate != 8000 && rate != 16000)
        throw FormatError(StrCat(path, ": unsupported sample rate ", rate));
      WaveUtterance wave;
      wave.utterance_id = utterance_id;
      wave.sample_rate = rate;
      wave.samples.resize(size / 2);
      for (auto &s : wave.samples) s = ReadLE<int16_t>(is, "samples");
      return wave;
    } else {
      is.seekg(size + (size & 1), std::ios::cur);
    }
  }
}

void WriteWave(const std::string &path, const WaveUtterance &wave) {
  std::ofstream os = OpenOut(path);
  const uint32 data_bytes = static_cast<uint32>(wave.samples.size() * 2);
  const uint32 rate = static_cast<uint32>(wave.sample_rate);
  os.write("RIFF", 4);
  WriteLE<uint32>(os, 36 + data_bytes);
  os.write("WAVEfmt ", 8);
  WriteLE<uint32>(os, 16);
  WriteLE<uint16_t>(os, 1);
  WriteLE<uint16_t>(os, 1);
  WriteLE<uint32>(os, rate);
  WriteLE<uint32>(os, rate * 2);
  WriteLE<uint16_t>(os, 2);
  WriteLE<uint16_t>(os, 16);
  os.write("data", 4);
  WriteLE<uint32>(os, data_bytes);
  for (double s : wave.samples) {
    const double clipped = std::clamp(std::round(s), -32768.0, 32767.0);
    WriteLE<int16_t>(os, static_cast<int16_t>(clipped));
  }
}

}  // namespace crnn
