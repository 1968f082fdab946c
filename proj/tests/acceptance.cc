// tests/acceptance.cc

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

// Acceptance suite.  Prints one PASS/FAIL line per criterion, followed by
// indented detail lines, and exits non-zero when any criterion fails.
//
//   crnn-acceptance            run every criterion
//   crnn-acceptance 2 5        run only the listed criteria

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "cli.h"
#include "crnn/gradcheck.h"
#include "crnn/synth.h"
#include "crnn/training.h"
#include "param-table.h"
#include "test-util.h"

using namespace crnn;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;

  void Note(const std::string &line) { details.push_back(line); }
  void Fail(const std::string &line) {
    pass = false;
    details.push_back("FAILED: " + line);
  }
};

std::string Fmt(const char *fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

// Training hyperparameters for the synthetic-corpus runs.  Clip, batch,
// subsequence and delay settings are the library defaults.
TrainConfig SynthTrainConfig(int32 epochs, uint64 seed) {
  TrainConfig c;
  c.epochs = epochs;
  c.lr_init = 2.0;
  c.lr_final = 0.05;
  c.seed = seed;
  return c;
}
constexpr double kSynthInitScale = 0.1;

NetworkSpec SynthSpec(const std::string &arch, const Corpus &corpus) {
  NetworkSpec spec;
  spec.layers = ParseArch(arch);
  spec.input.bands = corpus.features.front().num_bands;
  spec.input.channels = corpus.features.front().num_channels;
  spec.input.context = 0;
  spec.num_classes = corpus.num_classes;
  ValidateSpec(spec);
  return spec;
}

// 1. Parameter counts of the published models under default geometry.
Outcome ParameterCounts() {
  Outcome o;
  for (const auto &row : oracle::PublishedRows()) {
    NetworkSpec spec;
    spec.layers = ParseArch(row.arch);
    spec.input.context = row.context;
    ValidateSpec(spec);
    const int64 n = CountParams(spec);
    const double rel = std::abs(n / 1e6 - row.paper_millions) / row.paper_millions;
    const std::string line = Fmt("table %s  %-52s %12s  published %5.1fM  off %.2f%%",
                                 row.table.c_str(), row.arch.c_str(),
                                 FormatWithCommas(n).c_str(), row.paper_millions, 100 * rel);
    if (rel <= 0.03 && n == row.closed_form)
      o.Note(line);
    else
      o.Fail(line + (n != row.closed_form ? "  (closed form disagrees)" : ""));
  }
  return o;
}

// 2. Finite-difference check of every layer family.
Outcome Gradients() {
  Outcome o;
  struct Config {
    const char *family;
    const char *arch;  // empty: output layer only
  };
  const std::vector<Config> configs{
      {"rnn", "Rnn12"},           {"lstm", "Lstm12"},
      {"lstmp", "Lstm12P6"},      {"conv+pool", "Conv12 + Pooling"},
      {"clstm", "CLstm12"},       {"clstmp+pool", "CLstm12P6 + Pooling"},
      {"relu", "ReLU12"},         {"maxout", "Maxout8G3"},
      {"softmax", ""},            {"stacked", "2×(CLstm8P6 + Pooling) + Lstm6P4 + ReLU8"},
  };
  for (const auto &cfg : configs) {
    NetworkSpec spec;
    if (*cfg.arch) spec.layers = ParseArch(cfg.arch);
    spec.input.bands = std::string(cfg.family) == "stacked" ? 20 : 13;
    spec.input.channels = 3;
    spec.num_classes = 5;
    ValidateSpec(spec);
    const Network net(spec);
    for (uint64 seed : {1, 2, 3}) {
      std::mt19937_64 rng(seed * 101);
      SubsequenceBatch batch;
      batch.num_streams = 2;
      batch.length = 8;
      batch.features = RandomMatrix(16, net.InputDim(), rng);
      std::uniform_int_distribution<int32> label(0, 4);
      for (int r = 0; r < 16; r++) batch.targets.push_back(label(rng));
      batch.loss_mask.assign(16, 1);
      GradcheckOptions opts;
      opts.seed = seed;
      const GradcheckReport report =
          GradcheckNetwork(net, net.InitParams(seed, 0.5), batch, opts);
      int64 checked = 0;
      bool sampled_enough = true;
      for (const auto &b : report.blocks) {
        checked += b.num_checked;
        sampled_enough = sampled_enough && b.num_checked >= std::min<int64>(200, b.size);
      }
      const std::string line =
          Fmt("%-12s seed %d  %2zu blocks  %5lld values  max rel. error %.2e", cfg.family,
              static_cast<int>(seed), report.blocks.size(), static_cast<long long>(checked),
              report.MaxError());
      if (report.Passed(1e-4) && sampled_enough)
        o.Note(line);
      else
        o.Fail(line);
      // Failing blocks: show the raw values so rounding noise can be told from a bug.
      for (const auto &b : report.blocks)
        if (b.max_rel_error >= 1e-4)
          o.Note(Fmt("    %-10s analytic %+.4e numeric %+.4e abs. diff %.1e", b.name.c_str(),
                     b.worst_analytic, b.worst_numeric,
                     std::abs(b.worst_analytic - b.worst_numeric)));
    }
  }
  return o;
}

// 3. A CLSTM with one full-width patch is exactly an LSTM.
Outcome Equivalence() {
  Outcome o;
  for (int32 proj : {0, 7}) {
    const LstmLayer lstm(99, 16, proj);
    const ClstmLayer clstm(PatchLayout{33, 3, 33, 1, true}, 16, proj);
    if (clstm.NumPatches() != 1) o.Fail("full-width layout does not give a single patch");
    std::mt19937_64 rng(17 + proj);
    std::vector<double> params(lstm.NumParams());
    lstm.InitParams(params, rng, 0.3);
    // Transplant: same values, the CLSTM's own buffer.
    std::vector<double> transplanted(clstm.NumParams());
    if (transplanted.size() != params.size()) {
      o.Fail("parameter counts differ");
      continue;
    }
    std::copy(params.begin(), params.end(), transplanted.begin());
    int identical = 0;
    for (int seq = 0; seq < 5; seq++) {
      const Matrix in = RandomMatrix(20, 99, rng);
      Matrix a, b;
      lstm.Propagate(params, in, 1, &a);
      clstm.Propagate(transplanted, in, 1, &b);
      identical += (a == b);
    }
    const std::string line = Fmt("%s: %d of 5 length-20 sequences bit-identical",
                                 proj ? "LSTMP 16/7" : "LSTM 16", identical);
    if (identical == 5)
      o.Note(line);
    else
      o.Fail(line);
  }
  return o;
}

// 4. Memorizing a small synthetic corpus.
Outcome Overfit() {
  Outcome o;
  SynthOptions so;  // 50 utterances x 100 frames, 10 classes
  so.seed = 11;
  const SynthCorpus sc = GenerateSynthetic(so);
  const Network net(SynthSpec("CLstm32 + Pooling + ReLU64", sc.train));
  const TrainConfig config = SynthTrainConfig(50, 11);
  const TrainResult r =
      Train(net, net.InitParams(11, kSynthInitScale), sc.train, nullptr, config);
  const EvalResult ev = Evaluate(net, r.params, sc.train, config);
  o.Note(Fmt("CLstm32 + Pooling + ReLU64, %lld params, %d epochs",
             static_cast<long long>(net.NumParams()), config.epochs));
  o.Note(Fmt("last epoch train CE %.4f; final pass over train: CE %.4f, frame acc. %.4f",
             r.log.back().train_ce, ev.cross_entropy, ev.frame_accuracy));
  if (ev.frame_accuracy < 0.99) o.Fail("training frame accuracy below 0.99");
  if (!(ev.cross_entropy < 0.05)) o.Fail("training CE not below 0.05");
  for (int e = 1; e < 5; e++)
    if (!(r.log[e].train_ce < r.log[e - 1].train_ce)) o.Fail("CE not decreasing in the first 5 epochs");
  return o;
}

// 5. Generalizing to unseen frequency shifts.
Outcome ShiftGeneralization() {
  Outcome o;
  int wins = 0;
  for (uint64 seed : {1, 2, 3}) {
    SynthOptions so;
    so.seed = seed;
    so.shift_range = 4;
    so.disjoint_shifts = true;
    const SynthCorpus sc = GenerateSynthetic(so);
    double acc[2];
    int64 params[2];
    const char *archs[2] = {"CLstm32 + Pooling + ReLU64", "Lstm48 + ReLU64"};
    for (int k = 0; k < 2; k++) {
      const Network net(SynthSpec(archs[k], sc.train));
      const TrainConfig config = SynthTrainConfig(30, seed);
      const TrainResult r =
          Train(net, net.InitParams(seed, kSynthInitScale), sc.train, nullptr, config);
      acc[k] = Evaluate(net, r.params, sc.test, config).frame_accuracy;
      params[k] = net.NumParams();
    }
    wins += acc[0] > acc[1];
    o.Note(Fmt("seed %d: test frame acc. CLSTM %.4f (%lld params) vs LSTM %.4f (%lld params)",
               static_cast<int>(seed), acc[0], static_cast<long long>(params[0]), acc[1],
               static_cast<long long>(params[1])));
  }
  o.Note(Fmt("CLSTM ahead in %d of 3 seeds (train shifts |s| <= 2, test shifts 3..4)", wins));
  if (wins < 2) o.Fail("CLSTM ahead in fewer than 2 seeds");
  return o;
}

// 6. Properties of the training protocol on random cases.
Outcome ProtocolInvariants() {
  Outcome o;
  std::mt19937_64 rng(6);
  int partition_bad = 0, delay_bad = 0, clip_bad = 0;
  for (int trial = 0; trial < 1000; trial++) {
    const int32 T = 1 + static_cast<int32>(rng() % 400);
    std::vector<int> covered(T, 0);
    for (const auto &s : SplitSubsequences(T, 15, 5))
      for (int32 t = s.start + s.loss_offset; t < s.end; t++) covered[t]++;
    partition_bad += std::count_if(covered.begin(), covered.end(), [](int c) { return c != 1; }) > 0;

    std::vector<int32> labels(T);
    for (auto &l : labels) l = static_cast<int32>(rng() % 50);
    const auto d = DelayLabels(labels, 5);
    const int masked = static_cast<int>(std::count(d.valid.begin(), d.valid.end(), 0));
    bool ok = masked == std::min(5, T);
    for (int32 t = 5; t < T; t++) ok = ok && d.targets[t] == labels[t - 5];
    delay_bad += !ok;

    std::vector<double> g(1 + rng() % 300);
    FillRandom(g, rng, std::pow(10.0, static_cast<double>(rng() % 7) - 3));
    const double threshold = 0.01 + (rng() % 1000) / 100.0;
    const std::vector<double> before = g;
    const double norm = ClipGradients(g, threshold);
    clip_bad += GlobalNorm(g) > threshold * (1 + 1e-12) ||
                (norm <= threshold && g != before);
  }
  const bool lr_ok = LearningRate(0, 777, 0.04, 0.0004) == 0.04 &&
                     LearningRate(777, 777, 0.04, 0.0004) == 0.0004;
  o.Note(Fmt("1000 cases: partition violations %d, delay violations %d, clip violations %d",
             partition_bad, delay_bad, clip_bad));
  o.Note(Fmt("learning rate endpoints exact: %s", lr_ok ? "yes" : "no"));
  if (partition_bad || delay_bad || clip_bad || !lr_ok) o.Fail("protocol invariant violated");
  return o;
}

std::string Slurp(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

// 7. Two identical command-line runs give identical bytes.
Outcome Determinism() {
  Outcome o;
  TempDir dir;
  std::ostringstream out, err;
  if (RunCli({"synth", "--out", dir.Path("c"), "--seed", "7", "--shift-range", "2"}, out,
             err) != 0) {
    o.Fail("synth failed: " + err.str());
    return o;
  }
  for (const char *name : {"a", "b"}) {
    const int code = RunCli({"train", "--arch", "CLstm16 + Pooling + ReLU32", "--features",
                             dir.Path("c/train"), "--alignments", dir.Path("c/train.ali"),
                             "--valid-fraction", "0.2", "--epochs", "3", "--seed", "7",
                             "--lr-init", "1.0", "--lr-final", "0.1", "--out",
                             dir.Path(std::string(name) + ".model")},
                            out, err);
    if (code != 0) {
      o.Fail("train failed: " + err.str());
      return o;
    }
  }
  const bool same_model = Slurp(dir.Path("a.model")) == Slurp(dir.Path("b.model"));
  const bool same_log = Slurp(dir.Path("a.model.log")) == Slurp(dir.Path("b.model.log"));
  o.Note(Fmt("checkpoints identical: %s (%zu bytes); metrics logs identical: %s",
             same_model ? "yes" : "no", Slurp(dir.Path("a.model")).size(),
             same_log ? "yes" : "no"));
  if (!same_model || !same_log) o.Fail("runs differ");
  return o;
}

}  // namespace

int main(int argc, char **argv) {
  struct Criterion {
    int id;
    const char *name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "parameter counts within 3% of the published sizes", 1, ParameterCounts},
      {2, "analytic gradients match central differences (< 1e-4)", 120, Gradients},
      {3, "single full-width CLSTM patch is bit-identical to LSTM", 10, Equivalence},
      {4, "synthetic corpus memorized (acc >= 0.99, CE < 0.05)", 600, Overfit},
      {5, "CLSTM generalizes better to unseen frequency shifts", 1800, ShiftGeneralization},
      {6, "training protocol invariants on 1000 random cases", 60, ProtocolInvariants},
      {7, "identical seeds give bit-identical checkpoints and logs", 300, Determinism},
  };
  std::set<int> only;
  for (int k = 1; k < argc; k++) only.insert(std::atoi(argv[k]));

  int failures = 0;
  for (const auto &c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception &e) {
      o.Fail(std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) o.Fail(Fmt("took %.1f s, budget %.0f s", secs, c.budget_s));
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name
              << Fmt(" (%.1f s)", secs) << "\n";
    for (const auto &d : o.details) std::cout << "    " << d << "\n";
    std::cout.flush();
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
