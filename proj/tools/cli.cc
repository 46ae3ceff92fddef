// Copyright 2026 The QR Codec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.h"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "qrc/bitstream.h"
#include "qrc/checkpoint.h"
#include "qrc/codec.h"
#include "qrc/config.h"
#include "qrc/dataset.h"
#include "qrc/io.h"
#include "qrc/metrics.h"
#include "qrc/synthetic.h"
#include "qrc/training.h"

namespace qrc::cli {
namespace {

namespace fs = std::filesystem;

class CommandError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string Num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

// Files produced by one command. Removed again unless Commit() is reached.
class Outputs {
 public:
  ~Outputs() {
    if (committed_) return;
    for (const fs::path& p : written_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }
  void Text(const fs::path& path, const std::string& text) {
    WriteTextAtomic(path, text);
    written_.push_back(path);
  }
  void Bytes(const fs::path& path, std::span<const uint8_t> bytes) {
    WriteFileAtomic(path, bytes);
    written_.push_back(path);
  }
  void Model(const fs::path& path, const Checkpoint& ckpt) {
    SaveCheckpoint(ckpt, path);
    written_.push_back(path);
  }
  void Image(const fs::path& path, const ImageBuffer& image) {
    SaveImage(image, path);
    written_.push_back(path);
  }
  void Commit() { committed_ = true; }

 private:
  std::vector<fs::path> written_;
  bool committed_ = false;
};

std::string CsvHeader(const Config& config, uint64_t seed) {
  return "# config_hash=" + config.HashHex() + " seed=" + std::to_string(seed) +
         "\n";
}

std::string LogCsv(const Config& config, uint64_t seed,
                   const std::vector<EpochRecord>& history) {
  std::string s = CsvHeader(config, seed);
  s += "epoch,rate_bpp,distortion,feature_distance,loss,wall_seconds\n";
  for (const EpochRecord& r : history) {
    s += std::to_string(r.epoch) + "," + Num(r.rate_bpp) + "," +
         Num(r.distortion) + "," + Num(r.feature_distance) + "," + Num(r.loss) +
         "," + Num(r.wall_seconds) + "\n";
  }
  return s;
}

fs::path SiblingPath(const fs::path& path, const std::string& extension) {
  fs::path p = path;
  return p.replace_extension(extension);
}

PatchDataset LoadDataset(const fs::path& dir, int patch_size,
                         std::ostream& err) {
  std::vector<ImageBuffer> images = LoadImages(dir);
  if (images.empty()) throw CommandError("no .ppm images in " + dir.string());
  return PatchDataset(std::move(images), patch_size, &err);
}

// Training settings recorded in a checkpoint, with the seed override.
Config CheckpointConfig(const Checkpoint& ckpt) {
  Config c = Config::Parse(ckpt.config_text, "checkpoint config");
  ApplySeedOverride(c);
  return c;
}

void EnsureFrozen(CodecModel& model) {
  if (!model.frozen()) model.Freeze();
}

EpochCallback Progress(std::ostream& err, const std::string& phase) {
  return [&err, phase](const EpochRecord& r) {
    err << phase << " epoch " << r.epoch << ": loss " << Num(r.loss)
        << " rate " << Num(r.rate_bpp) << " bpp distortion "
        << Num(r.distortion) << " feature " << Num(r.feature_distance) << " ("
        << Num(r.wall_seconds) << " s)\n";
  };
}

Real ParseAlpha(const std::string& text) {
  size_t used = 0;
  try {
    const Real v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  if (fs::is_regular_file(text)) {
    return Config::Parse(ReadFileText(text), text).GetReal("alpha", NAN);
  }
  throw CommandError("--alpha must be a number or a best-alpha file, got '" +
                     text + "'");
}

struct TrainSoftArgs {
  std::string config, data, out, log, resume;
};

void TrainSoft(const TrainSoftArgs& a, std::ostream& err) {
  Config config = Config::Load(a.config);
  ApplySeedOverride(config);
  const TrainingConfig tc = TrainingConfig::FromConfig(config);
  const PatchDataset data = LoadDataset(a.data, tc.patch_size, err);
  CodecModel model;
  std::optional<TrainingState> resume;
  if (!a.resume.empty()) {
    Checkpoint ckpt = LoadCheckpoint(a.resume);
    if (!ckpt.training || ckpt.training->phase != PhaseName(Phase::kSoft)) {
      throw CommandError(a.resume + " holds no soft-phase training state");
    }
    if (!(ckpt.model.arch() == tc.Architecture())) {
      throw CommandError(a.resume + " was trained with another architecture");
    }
    model = std::move(ckpt.model);
    resume = std::move(ckpt.training);
  } else {
    Rng rng(tc.seed);
    model = CodecModel(tc.Architecture(), rng);
  }
  Trainer trainer(model, tc, Phase::kSoft, resume ? &*resume : nullptr);
  trainer.Run(data, tc.soft_epochs - static_cast<int>(trainer.epochs_done()),
              true, Progress(err, "soft"));
  Outputs out;
  out.Text(a.log.empty() ? SiblingPath(a.out, ".log.csv") : fs::path(a.log),
           LogCsv(config, tc.seed, trainer.history()));
  out.Model(a.out, {model, config.ToText(), trainer.State()});
  out.Commit();
}

struct ExploreArgs {
  std::string ckpt, data, out, best;
};

void ExploreAlphaCommand(const ExploreArgs& a, std::ostream& err) {
  const Checkpoint ckpt = LoadCheckpoint(a.ckpt);
  const Config config = CheckpointConfig(ckpt);
  const TrainingConfig tc = TrainingConfig::FromConfig(config);
  const PatchDataset data = LoadDataset(a.data, tc.patch_size, err);
  CodecModel soft = ckpt.model.Clone();
  EnsureFrozen(soft);
  ExplorationConfig ex;
  ex.alpha_max = tc.alpha_max;
  ex.alpha_min = tc.alpha_min;
  ex.patience = tc.patience;
  ex.distortion = tc.distortion;
  const AlphaTrialRunner runner = PredictiveTrialRunner(soft, data, tc);
  const ExplorationResult result =
      ExploreAlpha(ex, [&](Real alpha, int index) {
        const AlphaTrial t = runner(alpha, index);
        err << "alpha " << Num(alpha) << ": distortion " << Num(t.distortion)
            << " after " << t.epochs_run << " epochs\n";
        return t;
      });
  std::string report = CsvHeader(config, tc.seed);
  report += "alpha,final_loss,distortion,epochs_run\n";
  for (const AlphaTrial& t : result.trials) {
    report += Num(t.alpha) + "," + Num(t.final_loss) + "," +
              Num(t.distortion) + "," + std::to_string(t.epochs_run) + "\n";
  }
  Outputs out;
  out.Text(a.out, report);
  out.Text(a.best.empty() ? SiblingPath(a.out, ".alpha") : fs::path(a.best),
           "alpha = " + Num(result.best_alpha) + "\n");
  out.Commit();
  err << "best alpha " << Num(result.best_alpha) << "\n";
}

struct TrainPredictiveArgs {
  std::string ckpt, alpha, data, out, log;
};

void TrainPredictive(const TrainPredictiveArgs& a, std::ostream& err) {
  Checkpoint ckpt = LoadCheckpoint(a.ckpt);
  Config config = CheckpointConfig(ckpt);
  const Real alpha = ParseAlpha(a.alpha);
  if (!(alpha >= 0) || !std::isfinite(alpha)) {
    throw CommandError("alpha must be finite and non-negative");
  }
  config.Set("alpha", Num(alpha));
  const TrainingConfig tc = TrainingConfig::FromConfig(config);
  const PatchDataset data = LoadDataset(a.data, tc.patch_size, err);
  const bool resuming =
      ckpt.training && ckpt.training->phase == PhaseName(Phase::kPredictive);
  if (resuming && ckpt.training->alpha != alpha) {
    throw CommandError("checkpoint was trained with alpha " +
                       Num(ckpt.training->alpha) + ", not " + Num(alpha));
  }
  CodecModel model = std::move(ckpt.model);
  EnsureFrozen(model);
  if (model.num_rectifiers() != tc.num_rectifiers) {
    throw CommandError("n_qr in the checkpoint config does not match its model");
  }
  Trainer trainer(model, tc, Phase::kPredictive,
                  resuming ? &*ckpt.training : nullptr);
  trainer.Run(data,
              tc.predictive_epochs - static_cast<int>(trainer.epochs_done()),
              true, Progress(err, "predictive"));
  TrainingState state = trainer.State();
  state.alpha = alpha;
  Outputs out;
  out.Text(a.log.empty() ? SiblingPath(a.out, ".log.csv") : fs::path(a.log),
           LogCsv(config, tc.seed, trainer.history()));
  out.Model(a.out, {model, config.ToText(), state});
  out.Commit();
}

CodecModel LoadCodec(const std::string& path) {
  CodecModel model = LoadCheckpoint(path).model;
  EnsureFrozen(model);
  return model;
}

void CompressCommand(const std::string& ckpt, const std::string& in,
                     const std::string& out_path) {
  const CodecModel model = LoadCodec(ckpt);
  const CompressedImage c = Compress(model, ImageToTensor(LoadImage(in)));
  Outputs out;
  out.Bytes(out_path, c.bytes);
  out.Commit();
}

void DecompressCommand(const std::string& ckpt, const std::string& in,
                       const std::string& out_path) {
  const CodecModel model = LoadCodec(ckpt);
  const DecompressedImage d = Decompress(model, ReadFileBytes(in));
  Outputs out;
  out.Image(out_path, TensorToImage(d.image));
  out.Commit();
}

struct EvalArgs {
  std::string ckpt, data, out, model;
};

RDPoint Evaluate(const CodecModel& model, const ImageBuffer& image) {
  const Tensor x = ImageToTensor(image);
  const CompressedImage c = Compress(model, x);
  const DecompressedImage d = Decompress(model, c.bytes);
  const Tensor x_hat = ImageToTensor(TensorToImage(d.image));
  RDPoint p;
  p.bpp = BitsPerPixel(c.bytes.size() - kBitstreamHeaderSize, image.width,
                       image.height);
  p.bpp_total = BitsPerPixel(c.bytes.size(), image.width, image.height);
  p.psnr = Psnr(x, x_hat);
  const int scales = std::min(kMsSsimDefaultScales,
                              MaxMsSsimScales(image.height, image.width));
  if (scales > 0) {
    p.msssim = MsSsimValue(x, x_hat, scales);
    p.msssim_db = MsSsimDb(std::clamp<Real>(p.msssim, 0, 1));
  } else {
    p.msssim = p.msssim_db = NAN;
  }
  p.eps_q = QuantizationError(c.y, d.y_tilde);
  return p;
}

void EvalCommand(const EvalArgs& a, std::ostream& err) {
  const Checkpoint ckpt = LoadCheckpoint(a.ckpt);
  const Config config = CheckpointConfig(ckpt);
  const TrainingConfig tc = TrainingConfig::FromConfig(config);
  CodecModel model = ckpt.model;
  EnsureFrozen(model);
  const std::string name =
      a.model.empty() ? fs::path(a.ckpt).stem().string() : a.model;
  const std::vector<fs::path> files = ListImages(a.data);
  if (files.empty()) throw CommandError("no .ppm images in " + a.data);
  std::string csv = CsvHeader(config, tc.seed);
  csv += "image,q,model,bpp,bpp_total,psnr,msssim,msssim_db,eps_q\n";
  for (const fs::path& f : files) {
    RDPoint p = Evaluate(model, LoadImage(f));
    p.image = f.filename().string();
    p.quality = tc.quality;
    p.model = name;
    csv += CsvField(p.image) + "," + std::to_string(p.quality) + "," +
           CsvField(p.model) + "," + Num(p.bpp) + "," + Num(p.bpp_total) +
           "," + Num(p.psnr) + "," + Num(p.msssim) + "," + Num(p.msssim_db) +
           "," + Num(p.eps_q) + "\n";
    err << p.image << ": " << Num(p.bpp) << " bpp, " << Num(p.psnr)
        << " dB\n";
  }
  Outputs out;
  out.Text(a.out, csv);
  out.Commit();
}

void RdCurve(const std::vector<std::string>& evals, const std::string& out_path) {
  static const std::vector<std::string> kColumns = {
      "image", "q", "model", "bpp", "bpp_total", "psnr", "msssim",
      "msssim_db", "eps_q"};
  struct Sums {
    int images = 0;
    std::array<double, 6> total{};
  };
  std::map<std::pair<std::string, int>, Sums> groups;
  std::string header;
  for (const std::string& path : evals) {
    std::istringstream in(ReadFileText(path));
    std::string line;
    bool seen_columns = false;
    int number = 0;
    while (std::getline(in, line)) {
      ++number;
      if (line.empty()) continue;
      if (line[0] == '#') {
        header += "# source=" + fs::path(path).filename().string() + " " +
                  line.substr(1 + (line.size() > 1 && line[1] == ' ')) + "\n";
        continue;
      }
      const std::vector<std::string> f = SplitCsv(line);
      const std::string where = path + ":" + std::to_string(number);
      if (!seen_columns) {
        if (f != kColumns) throw CommandError(where + ": not an eval CSV");
        seen_columns = true;
        continue;
      }
      if (f.size() != kColumns.size()) {
        throw CommandError(where + ": expected " +
                           std::to_string(kColumns.size()) + " fields");
      }
      try {
        Sums& s = groups[{f[2], std::stoi(f[1])}];
        ++s.images;
        for (size_t i = 0; i < s.total.size(); ++i) s.total[i] += std::stod(f[3 + i]);
      } catch (const std::logic_error&) {
        throw CommandError(where + ": malformed number");
      }
    }
    if (!seen_columns) throw CommandError(path + ": no eval rows");
  }
  std::string csv = header;
  csv += "model,q,images,bpp,bpp_total,psnr,msssim,msssim_db,eps_q\n";
  for (const auto& [key, s] : groups) {
    csv += CsvField(key.first) + "," + std::to_string(key.second) + "," +
           std::to_string(s.images);
    for (double t : s.total) csv += "," + Num(t / s.images);
    csv += "\n";
  }
  Outputs out;
  out.Text(out_path, csv);
  out.Commit();
}

struct SynthArgs {
  std::string out;
  int count = 16;
  int width = 64;
  int height = 64;
  uint64_t seed = 1000;
};

void SynthData(const SynthArgs& a) {
  if (a.count <= 0 || a.width <= 0 || a.height <= 0) {
    throw CommandError("count, width and height must be positive");
  }
  fs::create_directories(a.out);
  Outputs out;
  const std::vector<ImageBuffer> images =
      SyntheticImages(a.count, a.width, a.height, a.seed);
  for (size_t i = 0; i < images.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "synth_%04zu.ppm", i);
    out.Image(fs::path(a.out) / name, images[i]);
  }
  out.Commit();
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Learned image codec with a quantization rectifier", "qrcodec"};
  app.require_subcommand(1);

  TrainSoftArgs soft;
  CLI::App* train_soft = app.add_subcommand("train-soft", "Soft-phase training");
  train_soft->add_option("--config", soft.config, "Config file")->required();
  train_soft->add_option("--data", soft.data, "Directory of .ppm images")
      ->required();
  train_soft->add_option("--out", soft.out, "Output checkpoint")->required();
  train_soft->add_option("--log", soft.log, "Log CSV (default: <out>.log.csv)");
  train_soft->add_option("--resume", soft.resume,
                         "Continue from a soft-phase checkpoint");

  ExploreArgs explore;
  CLI::App* explore_alpha =
      app.add_subcommand("explore-alpha", "Search the rectifier coefficient");
  explore_alpha->add_option("--ckpt", explore.ckpt, "Soft-phase checkpoint")
      ->required();
  explore_alpha->add_option("--data", explore.data, "Directory of .ppm images")
      ->required();
  explore_alpha->add_option("--out", explore.out, "Report CSV")->required();
  explore_alpha->add_option("--best", explore.best,
                            "Best-alpha file (default: <out>.alpha)");

  TrainPredictiveArgs pred;
  CLI::App* train_pred =
      app.add_subcommand("train-predictive", "Predictive-phase training");
  train_pred->add_option("--ckpt", pred.ckpt, "Soft-phase checkpoint")
      ->required();
  train_pred->add_option("--alpha", pred.alpha, "Value or best-alpha file")
      ->required();
  train_pred->add_option("--data", pred.data, "Directory of .ppm images")
      ->required();
  train_pred->add_option("--out", pred.out, "Output checkpoint")->required();
  train_pred->add_option("--log", pred.log, "Log CSV (default: <out>.log.csv)");

  std::string ckpt, in, out_path;
  CLI::App* compress = app.add_subcommand("compress", "Image to bitstream");
  CLI::App* decompress = app.add_subcommand("decompress", "Bitstream to image");
  for (CLI::App* sub : {compress, decompress}) {
    sub->add_option("--ckpt", ckpt, "Checkpoint")->required();
    sub->add_option("--in", in, "Input file")->required();
    sub->add_option("--out", out_path, "Output file")->required();
  }

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Rate-distortion evaluation");
  eval_cmd->add_option("--ckpt", eval.ckpt, "Checkpoint")->required();
  eval_cmd->add_option("--data", eval.data, "Directory of .ppm images")
      ->required();
  eval_cmd->add_option("--out", eval.out, "Eval CSV")->required();
  eval_cmd->add_option("--model", eval.model,
                       "Model label (default: checkpoint file stem)");

  std::vector<std::string> evals;
  CLI::App* rd = app.add_subcommand("rd-curve", "Average eval CSVs per model and q");
  rd->add_option("--evals", evals, "Eval CSVs")->required();
  rd->add_option("--out", out_path, "Curve CSV")->required();

  SynthArgs synth;
  CLI::App* synth_cmd =
      app.add_subcommand("synth-data", "Write procedural training images");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--count", synth.count, "Number of images");
  synth_cmd->add_option("--width", synth.width, "Width");
  synth_cmd->add_option("--height", synth.height, "Height");
  synth_cmd->add_option("--seed", synth.seed, "First seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*train_soft) TrainSoft(soft, err);
    if (*explore_alpha) ExploreAlphaCommand(explore, err);
    if (*train_pred) TrainPredictive(pred, err);
    if (*compress) CompressCommand(ckpt, in, out_path);
    if (*decompress) DecompressCommand(ckpt, in, out_path);
    if (*eval_cmd) EvalCommand(eval, err);
    if (*rd) RdCurve(evals, out_path);
    if (*synth_cmd) SynthData(synth);
  } catch (const std::exception& e) {
    err << "qrcodec: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace qrc::cli
