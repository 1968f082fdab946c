// tools/cli.cc

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

#include "cli.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "crnn/arch-spec.h"
#include "crnn/features.h"
#include "crnn/gradcheck.h"
#include "crnn/network.h"
#include "crnn/synth.h"
#include "crnn/training.h"

namespace crnn {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Thrown for problems with the invocation itself; maps to kExitUsage.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct GeometryFlags {
  int32 pool = 3;
  int32 patch_size = 10;
  int32 patch_stride = 1;
  std::optional<int32> context;
  std::optional<int32> classes;
};

struct Options {
  std::string arch;
  std::string spec_path;
  std::string features;
  std::string alignments;
  std::string valid_features;
  std::string valid_alignments;
  std::string out;
  std::string log_path;
  std::string model;
  std::string input_dir;
  std::optional<int32> eval_label_delay;
  double valid_fraction = 0.0;
  double init_scale = 0.05;
  GeometryFlags geometry;
  TrainConfig train;
  FbankOptions fbank;
  SynthOptions synth;
  int32 bands = 33;
  int32 channels = 3;
  // gradcheck
  int32 gc_bands = 13;
  int32 gc_classes = 5;
  int32 gc_length = 8;
  int32 gc_streams = 2;
  double gc_init_scale = 0.5;
  GradcheckOptions gc;
};

void AddGeometryFlags(CLI::App *cmd, GeometryFlags *g) {
  cmd->add_option("--pool", g->pool, "Pooling width along frequency")->capture_default_str();
  cmd->add_option("--patch-size", g->patch_size, "Bands per patch of the first patch layer")
      ->capture_default_str();
  cmd->add_option("--patch-stride", g->patch_stride, "Patch stride of the first patch layer")
      ->capture_default_str();
  cmd->add_option("--context", g->context,
                  "Frames of context on each side (default 5 for fully connected stacks, else 0)");
}

void AddTrainFlags(CLI::App *cmd, TrainConfig *c) {
  cmd->add_option("--epochs", c->epochs)->capture_default_str();
  cmd->add_option("--batch-size", c->batch_size)->capture_default_str();
  cmd->add_option("--subseq-len", c->subseq_len)->capture_default_str();
  cmd->add_option("--overlap", c->overlap)->capture_default_str();
  cmd->add_option("--label-delay", c->label_delay)->capture_default_str();
  cmd->add_option("--lr-init", c->lr_init)->capture_default_str();
  cmd->add_option("--lr-final", c->lr_final)->capture_default_str();
  cmd->add_option("--clip", c->clip_threshold, "Global gradient norm threshold")
      ->capture_default_str();
  cmd->add_flag("--deterministic,!--no-deterministic", c->deterministic,
                "Single-threaded reproducible execution (always on in this build)");
}

// Configuration checks throw plain Error; report them as usage errors.
template <typename F>
void AsUsage(F &&check) {
  try {
    check();
  } catch (const Error &e) {
    throw UsageError(e.what());
  }
}

std::string ReadTextFile(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void WriteTextFile(const std::string &path, const std::string &text) {
  std::ofstream os(path);
  os << text;
  if (!os) throw Error("cannot write " + path);
}

// Network spec from --spec or --arch, completed with input and class counts.
NetworkSpec BuildSpec(const Options &o, int32 bands, int32 channels, int32 num_classes) {
  NetworkSpec spec;
  if (!o.spec_path.empty()) {
    spec = SpecFromJson(ReadTextFile(o.spec_path));
  } else {
    if (o.arch.empty()) throw UsageError("one of --arch or --spec is required");
    spec.layers = ParseArch(o.arch);
    spec.geometry.patch_size = o.geometry.patch_size;
    spec.geometry.stride = o.geometry.patch_stride;
    spec.geometry.pool_size = o.geometry.pool;
    spec.input.context = o.geometry.context.value_or(DefaultContext(spec.layers));
  }
  spec.input.bands = bands;
  spec.input.channels = channels;
  if (num_classes > 0) spec.num_classes = num_classes;
  ValidateSpec(spec);
  return spec;
}

std::string ArchOf(const Options &o, const NetworkSpec &spec) {
  return o.arch.empty() ? RenderArch(spec.layers) : o.arch;
}

json ConfigToJson(const TrainConfig &c) {
  return {{"subseq_len", c.subseq_len},     {"overlap", c.overlap},
          {"batch_size", c.batch_size},     {"label_delay", c.label_delay},
          {"clip_threshold", c.clip_threshold}, {"lr_init", c.lr_init},
          {"lr_final", c.lr_final},         {"epochs", c.epochs},
          {"seed", c.seed},                 {"deterministic", c.deterministic}};
}

TrainConfig ConfigFromJson(const json &j) {
  TrainConfig c;
  c.subseq_len = j.at("subseq_len").get<int32>();
  c.overlap = j.at("overlap").get<int32>();
  c.batch_size = j.at("batch_size").get<int32>();
  c.label_delay = j.at("label_delay").get<int32>();
  c.clip_threshold = j.at("clip_threshold").get<double>();
  c.lr_init = j.at("lr_init").get<double>();
  c.lr_final = j.at("lr_final").get<double>();
  c.epochs = j.at("epochs").get<int32>();
  c.seed = j.at("seed").get<uint64>();
  c.deterministic = j.at("deterministic").get<bool>();
  return c;
}

Corpus LoadChecked(const std::string &features, const std::string &alignments,
                   int32 num_classes) {
  Corpus corpus = LoadCorpus(features, alignments, num_classes);
  if (corpus.Size() == 0) throw UsageError("no input utterances in " + features);
  return corpus;
}

int CmdFeaturize(const Options &o, std::ostream &out) {
  std::vector<fs::path> wavs;
  for (const auto &entry : fs::directory_iterator(o.input_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".wav")
      wavs.push_back(entry.path());
  if (wavs.empty()) throw UsageError("no input utterances in " + o.input_dir);
  std::sort(wavs.begin(), wavs.end());
  fs::create_directories(o.out);
  int32 dim = 0, bands = 0, channels = 0;
  for (const auto &path : wavs) {
    const std::string id = path.stem().string();
    const FeatureSequence feats = ComputeFbank(ReadWave(path.string(), id), o.fbank);
    WriteFeatures((fs::path(o.out) / (id + ".crnf")).string(), feats);
    dim = feats.Dim();
    bands = feats.num_bands;
    channels = feats.num_channels;
  }
  out << "featurized " << wavs.size() << " utterances, " << dim << " dims (" << bands
      << " bands x " << channels << " channels)\n";
  return kExitOk;
}

int CmdCountParams(const Options &o, std::ostream &out) {
  const NetworkSpec spec = BuildSpec(o, o.bands, o.channels, o.geometry.classes.value_or(5529));
  const int64 n = CountParams(spec);
  out << FormatWithCommas(n) << " (" << FormatMillions(n) << ")\n";
  return kExitOk;
}

int CmdSynth(const Options &o, std::ostream &out) {
  SynthOptions so = o.synth;
  if (o.geometry.classes) so.num_classes = *o.geometry.classes;
  AsUsage([&] { so.Validate(); });
  const SynthCorpus sc = GenerateSynthetic(so);
  const fs::path root(o.out);
  SaveCorpus(sc.train, (root / "train").string(), (root / "train.ali").string());
  json shifts = {{"train", sc.train_shifts}};
  if (sc.test.Size() > 0) {
    SaveCorpus(sc.test, (root / "test").string(), (root / "test.ali").string());
    shifts["test"] = sc.test_shifts;
  }
  WriteTextFile((root / "shifts.json").string(), shifts.dump(1) + "\n");
  out << "wrote " << sc.train.Size() << " train and " << sc.test.Size()
      << " test utterances to " << o.out << "\n";
  return kExitOk;
}

int CmdTrain(const Options &o, std::ostream &out) {
  TrainConfig config = o.train;
  AsUsage([&] { config.Validate(); });
  Corpus all = LoadChecked(o.features, o.alignments, o.geometry.classes.value_or(0));
  Corpus train, valid;
  if (!o.valid_features.empty()) {
    train = std::move(all);
    valid = LoadChecked(o.valid_features, o.valid_alignments, train.num_classes);
  } else {
    std::tie(train, valid) = SplitCorpus(all, o.valid_fraction, config.seed);
    if (train.Size() == 0) throw UsageError("validation fraction leaves no training data");
  }
  const FeatureSequence &first = train.features.front();
  const NetworkSpec spec = BuildSpec(o, first.num_bands, first.num_channels, train.num_classes);
  const Network net(spec);
  const ParameterSet init = net.InitParams(config.seed, o.init_scale);

  const std::string log_path = o.log_path.empty() ? o.out + ".log" : o.log_path;
  std::ofstream log(log_path);
  if (!log) throw Error("cannot write " + log_path);
  const TrainResult result =
      Train(net, init, train, valid.Size() > 0 ? &valid : nullptr, config,
            [&](const EpochMetrics &m) {
              out << m.ToLine() << "\n";
              log << m.ToLine() << "\n";
            });

  WriteCheckpoint(o.out, net, result.params);
  const Vector priors = ComputePriors(train.alignments, train.num_classes);
  json sidecar = {{"arch", ArchOf(o, spec)},
                  {"spec", json::parse(SpecToJson(spec))},
                  {"train_config", ConfigToJson(config)},
                  {"init_scale", o.init_scale},
                  {"priors", std::vector<double>(priors.data(), priors.data() + priors.size())}};
  WriteTextFile(o.out + ".json", sidecar.dump(1) + "\n");
  out << "wrote " << o.out << " (" << FormatWithCommas(net.NumParams()) << " parameters)\n";
  return kExitOk;
}

int CmdEval(const Options &o, std::ostream &out) {
  const std::string sidecar_path = o.model + ".json";
  if (!fs::exists(sidecar_path)) throw UsageError("missing model description " + sidecar_path);
  const json sidecar = json::parse(ReadTextFile(sidecar_path));
  const NetworkSpec spec = SpecFromJson(sidecar.at("spec").dump());
  TrainConfig config = ConfigFromJson(sidecar.at("train_config"));
  if (o.eval_label_delay) config.label_delay = *o.eval_label_delay;
  const Network net(spec);
  const ParameterSet params = ReadCheckpoint(o.model, net);
  const Corpus corpus = LoadChecked(o.features, o.alignments, spec.num_classes);
  const EvalResult r = Evaluate(net, params, corpus, config);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "frames %lld frame_accuracy %.6f cross_entropy %.6f\n",
                static_cast<long long>(r.num_frames), r.frame_accuracy, r.cross_entropy);
  out << buf;
  return kExitOk;
}

int CmdGradcheck(const Options &o, std::ostream &out) {
  const NetworkSpec spec = BuildSpec(o, o.gc_bands, o.channels, o.gc_classes);
  const Network net(spec);
  const ParameterSet params = net.InitParams(o.gc.seed, o.gc_init_scale);
  std::mt19937_64 rng(o.gc.seed + 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int32> label(0, spec.num_classes - 1);
  SubsequenceBatch batch;
  batch.num_streams = o.gc_streams;
  batch.length = o.gc_length;
  const int32 rows = o.gc_streams * o.gc_length;
  batch.features.resize(rows, net.InputDim());
  for (int32 r = 0; r < rows; r++)
    for (int32 d = 0; d < net.InputDim(); d++) batch.features(r, d) = gauss(rng);
  for (int32 r = 0; r < rows; r++) batch.targets.push_back(label(rng));
  batch.loss_mask.assign(rows, 1);
  const GradcheckReport report = GradcheckNetwork(net, params, batch, o.gc);
  out << report.ToString();
  const bool ok = report.Passed(o.gc.tolerance);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max relative error %.3e (tolerance %.1e): %s\n",
                report.MaxError(), o.gc.tolerance, ok ? "PASS" : "FAIL");
  out << buf;
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int RunCli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  Options o;
  CLI::App app{"crnn: convolutional LSTM acoustic models"};
  app.require_subcommand(1);
  uint64 seed = 0;

  auto *featurize = app.add_subcommand("featurize", "Log mel filterbank features from WAV files");
  featurize->add_option("--input", o.input_dir, "Directory of mono 16-bit WAV files")
      ->required()
      ->check(CLI::ExistingDirectory);
  featurize->add_option("--out", o.out, "Output feature directory")->required();
  featurize->add_option("--num-mel", o.fbank.num_mel)->capture_default_str();
  featurize->add_option("--frame-length", o.fbank.frame_length_ms, "ms")->capture_default_str();
  featurize->add_option("--frame-shift", o.fbank.frame_shift_ms, "ms")->capture_default_str();

  auto *count = app.add_subcommand("count-params", "Print the parameter count of an architecture");
  auto *arch_opt = count->add_option("arch,--arch", o.arch, "Architecture string");
  count->add_option("--spec", o.spec_path, "JSON network spec")->excludes(arch_opt);
  count->add_option("--classes", o.geometry.classes, "Output classes (default 5529)");
  count->add_option("--bands", o.bands, "Bands per frame including energy")->capture_default_str();
  count->add_option("--channels", o.channels)->capture_default_str();
  AddGeometryFlags(count, &o.geometry);

  auto *synth = app.add_subcommand("synth", "Generate a synthetic filterbank corpus");
  synth->add_option("--out", o.out, "Output directory")->required();
  synth->add_option("--utterances", o.synth.num_utterances)->capture_default_str();
  synth->add_option("--test-utterances", o.synth.num_test_utterances)->capture_default_str();
  synth->add_option("--frames", o.synth.num_frames)->capture_default_str();
  synth->add_option("--classes", o.geometry.classes, "Classes (default 10)");
  synth->add_option("--shift-range", o.synth.shift_range, "Largest band shift")
      ->capture_default_str();
  synth->add_flag("--disjoint-shifts", o.synth.disjoint_shifts,
                  "Train on small shifts, test on larger ones");
  synth->add_option("--noise", o.synth.noise)->capture_default_str();
  synth->add_option("--seed", seed)->capture_default_str();

  auto *train = app.add_subcommand("train", "Train a network with truncated BPTT");
  auto *train_arch = train->add_option("--arch", o.arch, "Architecture string");
  train->add_option("--spec", o.spec_path, "JSON network spec")
      ->excludes(train_arch)
      ->check(CLI::ExistingFile);
  train->add_option("--features", o.features)->required()->check(CLI::ExistingDirectory);
  train->add_option("--alignments", o.alignments)->required()->check(CLI::ExistingFile);
  auto *vf = train->add_option("--valid-features", o.valid_features)
                 ->check(CLI::ExistingDirectory);
  auto *va = train->add_option("--valid-alignments", o.valid_alignments)
                 ->check(CLI::ExistingFile);
  vf->needs(va);
  va->needs(vf);
  train->add_option("--valid-fraction", o.valid_fraction, "Held-out utterance fraction")
      ->excludes(vf)
      ->capture_default_str();
  train->add_option("--out", o.out, "Checkpoint path")->required();
  train->add_option("--log", o.log_path, "Metrics log (default <out>.log)");
  train->add_option("--classes", o.geometry.classes, "Output classes (default max label + 1)");
  train->add_option("--init-scale", o.init_scale)->capture_default_str();
  train->add_option("--seed", seed)->capture_default_str();
  AddGeometryFlags(train, &o.geometry);
  AddTrainFlags(train, &o.train);

  auto *eval = app.add_subcommand("eval", "Frame accuracy and cross entropy of a checkpoint");
  eval->add_option("--model", o.model, "Checkpoint written by train")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--features", o.features)->required()->check(CLI::ExistingDirectory);
  eval->add_option("--alignments", o.alignments)->required()->check(CLI::ExistingFile);
  eval->add_option("--label-delay", o.eval_label_delay, "Overrides the training delay");

  auto *gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  auto *gc_arch = gradcheck->add_option("--arch", o.arch, "Architecture string");
  gradcheck->add_option("--spec", o.spec_path, "JSON network spec")
      ->excludes(gc_arch)
      ->check(CLI::ExistingFile);
  gradcheck->add_option("--bands", o.gc_bands)->capture_default_str();
  gradcheck->add_option("--channels", o.channels)->capture_default_str();
  gradcheck->add_option("--classes", o.gc_classes)->capture_default_str();
  gradcheck->add_option("--subseq-len", o.gc_length)->capture_default_str();
  gradcheck->add_option("--streams", o.gc_streams)->capture_default_str();
  gradcheck->add_option("--init-scale", o.gc_init_scale)->capture_default_str();
  gradcheck->add_option("--epsilon", o.gc.epsilon)->capture_default_str();
  gradcheck->add_option("--tolerance", o.gc.tolerance)->capture_default_str();
  gradcheck->add_option("--samples", o.gc.samples_per_block, "Samples per parameter block")
      ->capture_default_str();
  gradcheck->add_option("--seed", seed)->capture_default_str();
  AddGeometryFlags(gradcheck, &o.geometry);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  // A lone --lr-init below the default final rate implies a constant rate.
  if (*train && train->get_option("--lr-final")->count() == 0)
    o.train.lr_final = std::min(o.train.lr_final, o.train.lr_init);
  o.train.seed = seed;
  o.synth.seed = seed;
  o.gc.seed = seed;

  try {
    if (*featurize) return CmdFeaturize(o, out);
    if (*count) return CmdCountParams(o, out);
    if (*synth) return CmdSynth(o, out);
    if (*train) return CmdTrain(o, out);
    if (*eval) return CmdEval(o, out);
    if (*gradcheck) return CmdGradcheck(o, out);
  } catch (const ParseError &e) {
    err << "error: " << e.what() << "\n  " << o.arch
        << "\n  " << std::string(e.Position(), ' ') << "^\n";
    return kExitUsage;
  } catch (const DivergenceError &e) {
    err << "error: training diverged at step " << e.Step() << ": " << e.what() << "\n";
    return kExitDivergence;
  } catch (const UsageError &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const SpecError &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace crnn
