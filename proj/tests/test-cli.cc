// tests/test-cli.cc

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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "doctest.h"

#include "cli.h"
#include "crnn/network.h"
#include "test-util.h"

using namespace crnn;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run Cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string Slurp(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("count-params") {
  CHECK(Cli({"count-params", "Lstm750"}).out == "6,704,529 (6.7M)\n");
  const Run fc = Cli({"count-params", "4×ReLU2000", "--context", "5"});
  CHECK(fc.code == kExitOk);
  CHECK(fc.out == "25,249,529 (25.2M)\n");
  const Run pool = Cli({"count-params", "Pooling"});
  CHECK(pool.code == kExitUsage);
  CHECK(pool.err.find("Pooling") != std::string::npos);
  const Run syntax = Cli({"count-params", "Lstm750 + + ReLU10"});
  CHECK(syntax.code == kExitUsage);
  CHECK(syntax.err.find("position 10") != std::string::npos);
  CHECK(Cli({"count-params", "Lstm10", "--classes", "3", "--bands", "2", "--channels", "1"}).out ==
        "583 (0.0M)\n");
}

TEST_CASE("usage errors") {
  CHECK(Cli({}).code == kExitUsage);
  CHECK(Cli({"frobnicate"}).code == kExitUsage);
  CHECK(Cli({"count-params", "Lstm10", "--bogus"}).code == kExitUsage);
  CHECK(Cli({"--help"}).code == kExitOk);
}

TEST_CASE("featurize") {
  TempDir dir;
  std::filesystem::create_directories(dir.Path("empty"));
  const Run empty = Cli({"featurize", "--input", dir.Path("empty"), "--out", dir.Path("f")});
  CHECK(empty.code == kExitUsage);
  CHECK(empty.err.find("no input utterances") != std::string::npos);

  std::filesystem::create_directories(dir.Path("wav"));
  for (int k = 0; k < 3; k++) {
    WaveUtterance w{"", std::vector<double>(4000 + 800 * k), 8000};
    for (size_t i = 0; i < w.samples.size(); i++)
      w.samples[i] = 3000 * std::sin(2 * std::numbers::pi * (300 + 200 * k) * i / 8000.0) +
                     50 * std::sin(0.37 * i * i);
    WriteWave(dir.Path("wav/u" + std::to_string(k) + ".wav"), w);
  }
  const Run run = Cli({"featurize", "--input", dir.Path("wav"), "--out", dir.Path("f")});
  REQUIRE(run.code == kExitOk);
  CHECK(run.out == "featurized 3 utterances, 99 dims (33 bands x 3 channels)\n");
  for (int k = 0; k < 3; k++) {
    const FeatureSequence fs = ReadFeatures(dir.Path("f/u" + std::to_string(k) + ".crnf"));
    CHECK(fs.num_bands == 33);
    CHECK(fs.num_channels == 3);
  }
  const std::string first = Slurp(dir.Path("f/u1.crnf"));
  REQUIRE(Cli({"featurize", "--input", dir.Path("wav"), "--out", dir.Path("f")}).code == 0);
  CHECK(Slurp(dir.Path("f/u1.crnf")) == first);
}

TEST_CASE("synth, train and eval") {
  TempDir dir;
  const Run synth = Cli({"synth", "--out", dir.Path("c"), "--utterances", "4",
                         "--test-utterances", "2", "--frames", "40", "--classes", "3",
                         "--seed", "2", "--shift-range", "2", "--disjoint-shifts"});
  REQUIRE(synth.code == kExitOk);
  CHECK(std::filesystem::exists(dir.Path("c/shifts.json")));
  const std::vector<std::string> train_args{
      "train",         "--arch",   "CLstm4 + Pooling + ReLU6",
      "--features",    dir.Path("c/train"),
      "--alignments",  dir.Path("c/train.ali"),
      "--epochs",      "2",        "--seed", "5", "--lr-init", "0.5", "--lr-final", "0.1",
      "--batch-size",  "3"};

  auto with_out = [&](const std::string &out) {
    auto args = train_args;
    args.push_back("--out");
    args.push_back(out);
    return args;
  };
  const Run a = Cli(with_out(dir.Path("a.model")));
  REQUIRE(a.code == kExitOk);
  CHECK(a.out.rfind("1 ", 0) == 0);
  const Run b = Cli(with_out(dir.Path("b.model")));
  REQUIRE(b.code == kExitOk);
  CHECK(Slurp(dir.Path("a.model")) == Slurp(dir.Path("b.model")));
  CHECK(Slurp(dir.Path("a.model.log")) == Slurp(dir.Path("b.model.log")));
  CHECK(Slurp(dir.Path("a.model.json")).find("\"arch\"") != std::string::npos);

  const Run eval = Cli({"eval", "--model", dir.Path("a.model"), "--features",
                        dir.Path("c/test"), "--alignments", dir.Path("c/test.ali")});
  CHECK(eval.code == kExitOk);
  CHECK(eval.out.rfind("frames ", 0) == 0);
  const Run missing = Cli({"eval", "--model", dir.Path("nope.model"), "--features",
                           dir.Path("c/test"), "--alignments", dir.Path("c/test.ali")});
  CHECK(missing.code == kExitUsage);

  SUBCASE("zero learning rate leaves the initial network") {
    auto args = std::vector<std::string>{"train", "--arch", "Lstm32", "--features",
                                         dir.Path("c/train"), "--alignments",
                                         dir.Path("c/train.ali"), "--epochs", "1",
                                         "--lr-init", "0", "--seed", "3",
                                         "--out", dir.Path("z.model")};
    REQUIRE(Cli(args).code == kExitOk);
    NetworkSpec spec;
    spec.layers = ParseArch("Lstm32");
    spec.num_classes = 3;
    const Network net(spec);
    CHECK(ReadCheckpoint(dir.Path("z.model"), net) == net.InitParams(3));
  }
  SUBCASE("divergence exits with its own code") {
    const std::vector<std::string> args{
        "train", "--arch", "ReLU6", "--features", dir.Path("c/train"), "--alignments",
        dir.Path("c/train.ali"), "--epochs", "3", "--lr-init", "1e300", "--lr-final", "1e300",
        "--clip", "1e300", "--out", dir.Path("d.model")};
    const Run d = Cli(args);
    CHECK(d.code == kExitDivergence);
    CHECK(d.err.find("diverged") != std::string::npos);
  }
  SUBCASE("bad configuration") {
    auto args = with_out(dir.Path("e.model"));
    args.insert(args.end(), {"--overlap", "20"});
    CHECK(Cli(args).code == kExitUsage);
  }
}

TEST_CASE("gradcheck command") {
  const Run r = Cli({"gradcheck", "--arch", "CLstm16 + Pooling + ReLU32"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("PASS") != std::string::npos);
}
