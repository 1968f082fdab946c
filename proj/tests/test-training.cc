// tests/test-training.cc

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
#include <map>
#include <random>
#include <set>

#include "doctest.h"

#include "crnn/gradcheck.h"
#include "crnn/synth.h"
#include "crnn/training.h"
#include "test-util.h"

using namespace crnn;

namespace {

std::vector<Subsequence> S(std::initializer_list<Subsequence> l) { return l; }

NetworkSpec ToySpec(const std::string &arch, int32 bands, int32 classes) {
  NetworkSpec spec;
  spec.layers = ParseArch(arch);
  spec.input.bands = bands;
  spec.input.channels = 3;
  spec.num_classes = classes;
  spec.geometry.patch_size = 4;
  spec.geometry.stacked_patch_size = 2;
  ValidateSpec(spec);
  return spec;
}

SynthOptions SmallCorpus(uint64 seed) {
  SynthOptions o;
  o.num_utterances = 6;
  o.num_test_utterances = 2;
  o.num_frames = 30;
  o.num_classes = 4;
  o.num_bands = 9;
  o.pattern_width = 3;
  o.seed = seed;
  return o;
}

}  // namespace

TEST_CASE("subsequence splitting") {
  CHECK(SplitSubsequences(15, 15, 5) == S({{0, 15, 0}}));
  CHECK(SplitSubsequences(35, 15, 5) == S({{0, 15, 0}, {10, 25, 5}, {20, 35, 5}}));
  CHECK(SplitSubsequences(12, 15, 5) == S({{0, 12, 0}}));
  // Right-aligned tail: only the frames not yet covered take loss.
  CHECK(SplitSubsequences(30, 15, 5) == S({{0, 15, 0}, {10, 25, 5}, {15, 30, 10}}));
  CHECK(SplitSubsequences(0, 15, 5).empty());
  CHECK_THROWS(SplitSubsequences(10, 5, 5));
}

TEST_CASE("loss windows partition the utterance") {
  std::mt19937 rng(1);
  for (int trial = 0; trial < 300; trial++) {
    const int T = 1 + rng() % 200, L = 1 + rng() % 30, overlap = rng() % L;
    const auto subs = SplitSubsequences(T, L, overlap);
    std::vector<int> covered(T, 0);
    for (const auto &s : subs) {
      CHECK(s.Length() == std::min(L, T));
      for (int t = s.start + s.loss_offset; t < s.end; t++) covered[t]++;
    }
    for (int t = 0; t < T; t++) CHECK(covered[t] == 1);
  }
}

TEST_CASE("label delay") {
  const std::vector<int32> labels{0, 1, 2, 3, 4, 5};
  const auto same = DelayLabels(labels, 0);
  CHECK(same.targets == labels);
  CHECK(std::count(same.valid.begin(), same.valid.end(), 1) == 6);
  const auto d5 = DelayLabels(labels, 5);
  CHECK(d5.targets[5] == 0);
  CHECK(std::count(d5.valid.begin(), d5.valid.end(), 0) == 5);
  const auto all = DelayLabels(labels, 9);
  CHECK(std::count(all.valid.begin(), all.valid.end(), 0) == 6);
  CHECK_THROWS(DelayLabels(labels, -1));
}

TEST_CASE("cross entropy") {
  Matrix onehot = Matrix::Zero(3, 4);
  onehot(0, 1) = onehot(1, 3) = onehot(2, 0) = 1.0;
  const std::vector<int32> targets{1, 3, 0};
  const std::vector<uint8_t> mask{1, 1, 1};
  CHECK(CrossEntropy(onehot, targets, mask).loss == 0.0);
  const Matrix uniform = Matrix::Constant(3, 4, 0.25);
  const auto ce = CrossEntropy(uniform, targets, mask);
  CHECK(ce.loss == doctest::Approx(std::log(4.0)));
  CHECK(ce.num_frames == 3);
  const std::vector<uint8_t> none{0, 0, 0};
  CHECK_THROWS(CrossEntropy(uniform, targets, none));
  // Floor keeps a zero posterior finite.
  CHECK(CrossEntropy(onehot, std::vector<int32>{0, 0, 1}, mask).loss ==
        doctest::Approx(-std::log(1e-10)));
  const std::vector<uint8_t> partial{1, 0, 1};
  const Matrix g = CrossEntropyGradient(uniform, targets, partial);
  CHECK(g(0, 1) == doctest::Approx(-1.0 / (2 * 0.25)));
  CHECK(g.row(1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(g(0, 0) == 0.0);
}

TEST_CASE("gradient clipping") {
  std::vector<double> g{3.0, 4.0};
  CHECK(ClipGradients(g, 10.0) == doctest::Approx(5.0));
  CHECK(g == std::vector<double>{3.0, 4.0});
  CHECK(ClipGradients(g, 2.5) == doctest::Approx(5.0));
  CHECK(g[0] == doctest::Approx(1.5));
  CHECK(g[1] == doctest::Approx(2.0));
  CHECK(GlobalNorm(g) == doctest::Approx(2.5));

  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; trial++) {
    std::vector<double> v(20);
    FillRandom(v, rng, 10.0);
    const std::vector<double> before = v;
    ClipGradients(v, 1.0);
    CHECK(GlobalNorm(v) <= 1.0 + 1e-12);
    double dot = 0;
    for (size_t k = 0; k < v.size(); k++) dot += v[k] * before[k];
    CHECK(dot / (GlobalNorm(v) * GlobalNorm(before)) == doctest::Approx(1.0));
  }
  std::vector<double> bad{1.0, std::nan("")};
  try {
    ClipGradients(bad, 1.0, 42);
    FAIL("expected divergence");
  } catch (const DivergenceError &e) {
    CHECK(e.Step() == 42);
  }
}

TEST_CASE("learning rate schedule") {
  CHECK(LearningRate(0, 100, 0.04, 0.0004) == 0.04);
  CHECK(LearningRate(100, 100, 0.04, 0.0004) == 0.0004);
  CHECK(LearningRate(50, 100, 0.1, 0.001) == doctest::Approx(0.01));
  double prev = 1e9;
  for (int s = 0; s <= 100; s++) {
    const double lr = LearningRate(s, 100, 0.1, 0.001);
    CHECK(lr < prev);
    prev = lr;
  }
}

TEST_CASE("sgd step") {
  std::vector<double> p{1.0};
  const std::vector<double> g{2.0};
  SgdStep(p, g, 0.0);
  CHECK(p[0] == 1.0);
  SgdStep(p, g, 0.1);
  CHECK(p[0] == doctest::Approx(0.8));
  SgdStep(p, g, 0.1);
  CHECK(p[0] == doctest::Approx(0.6));
  // One step on (p - 3)^2 with its analytic gradient reduces the loss.
  std::vector<double> q{0.0};
  const std::vector<double> dq{2 * (q[0] - 3)};
  SgdStep(q, dq, 0.01);
  CHECK((q[0] - 3) * (q[0] - 3) < 9.0);
}

TEST_CASE("config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.Validate());
  c.overlap = 15;
  CHECK_THROWS(c.Validate());
  c = TrainConfig();
  c.lr_final = 1.0;
  CHECK_THROWS(c.Validate());
  c = TrainConfig();
  c.label_delay = -1;
  CHECK_THROWS(c.Validate());
}

TEST_CASE("batches") {
  const SynthCorpus sc = GenerateSynthetic(SmallCorpus(3));
  const auto utts = PrepareCorpus(sc.train, InputSpec{9, 3, 0}, 2);
  TrainConfig config;
  config.batch_size = 4;
  config.subseq_len = 8;
  config.overlap = 3;
  std::vector<int32> order{5, 4, 3, 2, 1, 0};
  const auto batches = MakeBatches(utts, order, config);
  int64 loss_frames = 0;
  std::map<std::pair<std::string, int32>, int> seen;
  for (const auto &b : batches) {
    CHECK(b.num_streams <= 4);
    CHECK(b.features.rows() == static_cast<Eigen::Index>(b.num_streams) * b.length);
    std::set<std::string> ids;
    for (const auto &[id, start] : b.provenance) {
      ids.insert(id);
      seen[{id, start}]++;
    }
    CHECK(ids.size() == b.provenance.size());
    loss_frames += b.NumValid();
  }
  // Every delayed frame is trained on exactly once.
  CHECK(loss_frames == 6 * (30 - 2));
  for (const auto &[key, count] : seen) CHECK(count == 1);
  CHECK(batches.front().provenance.front().first == sc.train.features[5].utterance_id);
}

TEST_CASE("synthetic corpus") {
  SynthOptions o;
  o.seed = 4;
  const SynthCorpus a = GenerateSynthetic(o);
  const SynthCorpus b = GenerateSynthetic(o);
  REQUIRE(a.train.Size() == 50);
  CHECK(a.train.features[7].frames == b.train.features[7].frames);
  CHECK(a.train.alignments[7].labels == b.train.alignments[7].labels);
  CHECK(a.train.features[0].num_bands == 33);
  CHECK(a.train.features[0].Dim() == 99);
  std::vector<int> counts(10, 0);
  int total = 0;
  for (const auto &ali : a.train.alignments)
    for (int32 l : ali.labels) {
      counts[l]++;
      total++;
    }
  for (int c : counts) CHECK(std::abs(c - total / 10.0) <= 0.2 * total / 10.0);

  o.shift_range = 4;
  o.disjoint_shifts = true;
  const SynthCorpus d = GenerateSynthetic(o);
  for (int32 s : d.train_shifts) CHECK(std::abs(s) <= 2);
  for (int32 s : d.test_shifts) {
    CHECK(std::abs(s) > 2);
    CHECK(std::abs(s) <= 4);
  }
  o.shift_range = 20;
  CHECK_THROWS(GenerateSynthetic(o));
}

TEST_CASE("gradcheck engine") {
  // Quadratic with a known gradient; the report covers every block.
  const std::vector<double> p{1.0, -2.0, 0.5};
  const LossFunction loss = [](const std::vector<double> &v) {
    return v[0] * v[0] + 3 * v[1] * v[2];
  };
  const std::vector<double> good{2.0, 1.5, -6.0};
  const auto ok = CheckGradient(loss, p, good, {{"a", 0, 1}, {"b", 1, 2}}, {});
  REQUIRE(ok.blocks.size() == 2);
  CHECK(ok.blocks[1].num_checked == 2);
  CHECK(ok.MaxError() < 1e-8);
  const std::vector<double> bad{2.0, 1.5, -5.0};
  CHECK(!CheckGradient(loss, p, bad, {{"a", 0, 1}, {"b", 1, 2}}, {}).Passed(1e-4));
  CHECK(CheckGradient(loss, p, good, {}, {}).blocks.empty());
  CHECK(RelativeError(0.0, 0.0) == 0.0);
  CHECK(RelativeError(1.0, 2.0) == doctest::Approx(0.5));
}

TEST_CASE("softmax-only network gradient is exact") {
  std::mt19937_64 rng(5);
  const Network net(ToySpec("Lstm2", 4, 3));  // smallest stack ending in the affine softmax
  SubsequenceBatch batch;
  batch.num_streams = 2;
  batch.length = 3;
  batch.features = RandomMatrix(6, net.InputDim(), rng);
  batch.targets = {0, 1, 2, 2, 1, 0};
  batch.loss_mask = {1, 1, 1, 1, 1, 1};
  GradcheckOptions opts;
  const auto report = GradcheckNetwork(net, net.InitParams(1, 0.5), batch, opts);
  for (const auto &b : report.blocks)
    if (b.name.find("Affine") != std::string::npos) CHECK(b.max_rel_error < 1e-7);
  CHECK(report.Passed(1e-4));
}

TEST_CASE("training") {
  const SynthCorpus sc = GenerateSynthetic(SmallCorpus(6));
  const Network net(ToySpec("CLstm4 + Pooling + ReLU8", 9, 4));
  TrainConfig config;
  config.epochs = 1;
  config.batch_size = 3;
  config.label_delay = 2;
  config.seed = 8;

  SUBCASE("zero learning rate keeps the parameters") {
    config.lr_init = config.lr_final = 0.0;
    const ParameterSet init = net.InitParams(1);
    const TrainResult r = Train(net, init, sc.train, &sc.test, config);
    CHECK(r.params == init);
    REQUIRE(r.log.size() == 1);
    CHECK(r.log[0].valid_accuracy >= 0.0);
    CHECK(r.log[0].valid_accuracy <= 1.0);
  }
  SUBCASE("identical seeds give identical runs") {
    config.epochs = 3;
    config.lr_init = 1.0;
    config.lr_final = 0.1;
    const TrainResult a = Train(net, net.InitParams(1), sc.train, nullptr, config);
    const TrainResult b = Train(net, net.InitParams(1), sc.train, nullptr, config);
    CHECK(a.params == b.params);
    for (int e = 0; e < 3; e++) CHECK(a.log[e].ToLine() == b.log[e].ToLine());
    CHECK(std::isnan(a.log[0].valid_ce));
    CHECK(a.log[2].lr == doctest::Approx(0.1));
    CHECK(a.log[2].train_ce < a.log[0].train_ce);
  }
  SUBCASE("a divergent run reports the step") {
    config.lr_init = config.lr_final = 1e300;
    config.clip_threshold = 1e300;
    config.epochs = 3;
    CHECK_THROWS_AS(Train(net, net.InitParams(1), sc.train, nullptr, config), DivergenceError);
  }
  SUBCASE("class count must match") {
    Corpus wrong = sc.train;
    wrong.num_classes = 7;
    CHECK_THROWS(Train(net, net.InitParams(1), wrong, nullptr, config));
  }
}

TEST_CASE("evaluation tie-breaks to the lowest class") {
  const SynthCorpus sc = GenerateSynthetic(SmallCorpus(7));
  const Network net(ToySpec("ReLU3", 9, 4));
  ParameterSet zero = net.InitParams(0);
  zero.SetZero();
  TrainConfig config;
  config.label_delay = 0;
  const EvalResult r = Evaluate(net, zero, sc.test, config);
  int64 zeros = 0, total = 0;
  for (const auto &ali : sc.test.alignments)
    for (int32 l : ali.labels) {
      zeros += l == 0;
      total++;
    }
  CHECK(r.num_frames == total);
  CHECK(r.frame_accuracy == doctest::Approx(static_cast<double>(zeros) / total));
  CHECK(r.cross_entropy == doctest::Approx(std::log(4.0)));
}

TEST_CASE("corpus files") {
  TempDir dir;
  const SynthCorpus sc = GenerateSynthetic(SmallCorpus(9));
  SaveCorpus(sc.train, dir.Path("feats"), dir.Path("ali"));
  const Corpus back = LoadCorpus(dir.Path("feats"), dir.Path("ali"), 0);
  CHECK(back.num_classes == 4);
  REQUIRE(back.Size() == sc.train.Size());
  for (size_t k = 0; k < back.Size(); k++) {
    CHECK(back.features[k].frames == sc.train.features[k].frames);
    CHECK(back.alignments[k].labels == sc.train.alignments[k].labels);
  }
  const auto [train, valid] = SplitCorpus(back, 0.34, 1);
  CHECK(valid.Size() == 2);
  CHECK(train.Size() == 4);
  CHECK_THROWS(LoadCorpus(dir.Path("feats"), dir.Path("ali"), 2));
}
