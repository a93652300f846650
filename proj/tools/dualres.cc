// Copyright 2026 The dualres Authors. All Rights Reserved.
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

// dualres: degrade, train, restore, evaluate and receptive-field report.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric fault.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dualres/checkpoint.h"
#include "dualres/config_io.h"
#include "dualres/errors.h"
#include "dualres/fileutil.h"
#include "dualres/image.h"
#include "dualres/jpeg.h"
#include "dualres/log.h"
#include "dualres/metrics.h"
#include "dualres/network.h"
#include "dualres/patches.h"
#include "dualres/receptive_field.h"
#include "dualres/trainer.h"

namespace fs = std::filesystem;

namespace dualres {
namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

// Flag combinations CLI11 cannot express.
class CliUsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

fs::path QuantTablePathFor(const fs::path& coeffs) {
  return fs::path(coeffs.string() + ".qt");
}

// ---------------------------------------------------------------- degrade

struct DegradeArgs {
  fs::path input;
  fs::path output;
  int qf = 0;
  std::optional<fs::path> dump_coeffs;
};

int RunDegrade(const DegradeArgs& a) {
  const ImagePlane clean = LoadLuma(a.input);
  const Degraded d = Degrade(clean, a.qf);
  SaveLuma(d.degraded, a.output);
  if (a.dump_coeffs) {
    WriteCoeffGrid(d.cdct, *a.dump_coeffs);
    WriteQuantTable(d.table, QuantTablePathFor(*a.dump_coeffs));
  }
  std::printf("degraded %s (%dx%d) at qf %d -> %s, PSNR %.2f dB\n",
              a.input.string().c_str(), clean.width, clean.height, a.qf,
              a.output.string().c_str(), Psnr(clean, d.degraded));
  return kOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  fs::path corpus;
  std::optional<fs::path> config;
  std::optional<fs::path> init_checkpoint;
  fs::path out;
  std::optional<fs::path> log;
  // TrainConfig overrides.
  std::optional<double> lr_init, lr_decay_factor, adam_beta1, adam_beta2, adam_eps,
      val_fraction;
  std::optional<int> plateau_patience, batch_size, val_interval, val_patches;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> curriculum;
  std::optional<bool> fixed_batch;
  // NetworkConfig overrides.
  std::optional<int> base_channels;
  std::optional<std::vector<int>> dilations;
  std::optional<double> lambda, theta;
};

std::vector<CurriculumStage> ParseCurriculum(const std::string& text) {
  std::vector<CurriculumStage> stages;
  static const std::regex kStage(R"((\d+):(\d+):(\d+))");
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::smatch m;
    if (!std::regex_match(item, m, kStage)) {
      throw CliUsageError("curriculum stage '" + item + "' is not PATCH:QF:STEPS");
    }
    stages.push_back({std::stoi(m[1]), std::stoi(m[2]), std::stoi(m[3])});
  }
  if (stages.empty()) throw CliUsageError("empty --curriculum");
  return stages;
}

template <typename V>
void Override(const std::optional<V>& flag, V* field) {
  if (flag) *field = *flag;
}

int RunTrain(const TrainArgs& a) {
  ConfigFile cfg = a.config ? ReadConfigFile(*a.config) : ConfigFile{};
  TrainConfig& tc = cfg.train;
  Override(a.lr_init, &tc.lr_init);
  Override(a.lr_decay_factor, &tc.lr_decay_factor);
  Override(a.adam_beta1, &tc.adam_beta1);
  Override(a.adam_beta2, &tc.adam_beta2);
  Override(a.adam_eps, &tc.adam_eps);
  Override(a.val_fraction, &tc.val_fraction);
  Override(a.plateau_patience, &tc.plateau_patience);
  Override(a.batch_size, &tc.batch_size);
  Override(a.val_interval, &tc.val_interval);
  Override(a.val_patches, &tc.val_patches);
  Override(a.seed, &tc.seed);
  Override(a.fixed_batch, &tc.fixed_batch);
  if (a.curriculum) tc.curriculum = ParseCurriculum(*a.curriculum);
  NetworkConfig& nc = cfg.network;
  Override(a.base_channels, &nc.base_channels);
  Override(a.lambda, &nc.lambda);
  Override(a.theta, &nc.theta);
  if (a.dilations) {
    nc.bottleneck_dilations = *a.dilations;
    nc.pixel_depth = PixelBranchDepth(nc);
    nc.dct_depth = DctBranchDepth(nc);
  }
  tc.Validate();
  nc.Validate();

  std::optional<Checkpoint> init;
  if (a.init_checkpoint) {
    init = LoadCheckpoint(*a.init_checkpoint);
    RequireSameArchitecture(nc, init->model.config());
  }
  const auto corpus = LoadCorpus(a.corpus);
  if (corpus.empty()) {
    throw ConfigError("no PNG or PGM images in corpus '" + a.corpus.string() + "'");
  }
  std::string log_text;
  const TrainResult result = Train(corpus, tc, nc, init, [&](const TrainLogRecord& r) {
    log_text += r.ToJson() + "\n";
    LogInfo(r.ToJson());
  });
  SaveCheckpoint(result.checkpoint, a.out);
  WriteFileAtomically(a.log ? *a.log : fs::path(a.out.string() + ".log.jsonl"), log_text);
  std::printf("trained %lld steps over %zu stage(s); best validation loss %.6g at step %lld\n",
              static_cast<long long>(result.train_losses.size()), result.stages.size(),
              result.checkpoint.validation_loss.value_or(0.0),
              static_cast<long long>(result.checkpoint.step));
  std::printf("checkpoint %s digest %s (trained_qf %d, init %s)\n", a.out.string().c_str(),
              HexDigest(result.checkpoint.model.Digest()).c_str(),
              result.checkpoint.trained_qf, result.checkpoint.init_digest.c_str());
  return kOk;
}

// ---------------------------------------------------------------- restore

struct RestoreArgs {
  fs::path input;
  std::optional<int> qf;
  std::optional<fs::path> coeffs;
  fs::path checkpoint;
  fs::path output;
};

int RunRestore(const RestoreArgs& a) {
  if (a.qf.has_value() == a.coeffs.has_value()) {
    throw CliUsageError("restore needs exactly one of --qf and --coeffs");
  }
  const Checkpoint ck = LoadCheckpoint(a.checkpoint);
  const ImagePlane degraded = LoadLuma(a.input);
  CoeffGrid cdct;
  QuantTable table;
  if (a.qf) {
    table = LuminanceTable(*a.qf);
    cdct = Requantize(degraded, table);
  } else {
    cdct = ReadCoeffGrid(*a.coeffs);
    table = ReadQuantTable(QuantTablePathFor(*a.coeffs));
  }
  const ImagePlane restored = Restore(ck.model, degraded, cdct, table);
  SaveLuma(restored, a.output);
  std::printf("restored %s (%dx%d) -> %s\n", a.input.string().c_str(), degraded.width,
              degraded.height, a.output.string().c_str());
  return kOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  fs::path clean_dir;
  std::optional<fs::path> test_dir;
  std::optional<fs::path> checkpoint;
  std::optional<int> qf;
  std::optional<fs::path> report;
};

int RunEval(const EvalArgs& a) {
  MetricReport report;
  std::string title;
  if (a.test_dir) {
    if (a.checkpoint || a.qf) {
      throw CliUsageError("--test-dir excludes --checkpoint and --qf");
    }
    report = EvaluateDirectories(a.clean_dir, *a.test_dir);
    title = a.test_dir->string() + " vs " + a.clean_dir.string();
  } else if (a.checkpoint) {
    if (!a.qf) throw CliUsageError("--checkpoint needs --qf");
    const Checkpoint ck = LoadCheckpoint(*a.checkpoint);
    report = EvaluateModel(a.clean_dir, ck.model, *a.qf);
    title = "restored, qf " + std::to_string(*a.qf);
  } else if (a.qf) {
    report = EvaluateJpegBaseline(a.clean_dir, *a.qf);
    title = "JPEG, qf " + std::to_string(*a.qf);
  } else {
    throw CliUsageError("eval needs --test-dir, --checkpoint with --qf, or --qf");
  }
  std::fputs(FormatReportTable(report, title).c_str(), stdout);
  if (a.report) WriteFileAtomically(*a.report, FormatReportCsv(report));
  return kOk;
}

// ---------------------------------------------------------------- rf-report

struct RfArgs {
  std::optional<fs::path> config;
  std::optional<std::string> layers;
  std::uint64_t seed = 7;
};

// Comma-separated chain: cK[dD][sS] for a convolution, tK sS pP for a
// transposed convolution, e.g. "c3,c3d2,c3d4" or "c3s2,t4s2p1".
std::vector<LayerSpec> ParseLayerChain(const std::string& text) {
  static const std::regex kConv(R"(c(\d+)(?:d(\d+))?(?:s(\d+))?)");
  static const std::regex kTconv(R"(t(\d+)s(\d+)p(\d+))");
  std::vector<LayerSpec> layers;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::smatch m;
    if (std::regex_match(item, m, kConv)) {
      layers.push_back(LayerSpec::Conv(std::stoi(m[1]), m[2].matched ? std::stoi(m[2]) : 1,
                                       m[3].matched ? std::stoi(m[3]) : 1));
    } else if (std::regex_match(item, m, kTconv)) {
      layers.push_back(
          LayerSpec::TransposedConv(std::stoi(m[1]), std::stoi(m[2]), std::stoi(m[3])));
    } else {
      throw CliUsageError("layer '" + item + "' is not cK[dD][sS] or tKsSpP");
    }
  }
  if (layers.empty()) throw CliUsageError("empty --layers");
  for (const auto& l : layers) {
    try {
      ValidateLayerSpec(l);
    } catch (const ArgumentError& e) {
      throw CliUsageError(e.what());
    }
  }
  return layers;
}

bool ReportLine(const char* what, const char* unit, ReceptiveField analytic,
                ReceptiveField measured) {
  const bool ok = analytic == measured;
  std::printf("%-22s analytic %dx%d %s, impulse oracle %dx%d %s  %s\n", what,
              analytic.height, analytic.width, unit, measured.height, measured.width, unit,
              ok ? "agree" : "DISAGREE");
  return ok;
}

int RunRfReport(const RfArgs& a) {
  bool ok = true;
  if (a.layers) {
    const auto chain = ParseLayerChain(*a.layers);
    for (const auto& l : chain) std::printf("  %s\n", DescribeLayer(l).c_str());
    ok &= ReportLine("layer chain", "px", AnalyticReceptiveField(chain),
                     MeasureChainReceptiveField(chain, static_cast<unsigned>(a.seed)));
  } else {
    const NetworkConfig nc = a.config ? ReadConfigFile(*a.config).network : NetworkConfig{};
    nc.Validate();
    const auto pix = PixelBranchLayerPath(nc);
    const auto dct = DctBranchLayerPath(nc);
    const ReceptiveField pix_rf = AnalyticReceptiveField(pix);
    const ReceptiveField dct_rf = AnalyticReceptiveField(dct);
    std::printf("pixel branch longest path (%zu layers):\n", pix.size());
    for (const auto& l : pix) std::printf("  %s\n", DescribeLayer(l).c_str());
    ok &= ReportLine("pixel branch (chain)", "px", pix_rf,
                     MeasureChainReceptiveField(pix, static_cast<unsigned>(a.seed)));
    ok &= ReportLine("pixel branch (network)", "px", pix_rf,
                     MeasurePixelBranchReceptiveField(nc, a.seed));
    std::printf("DCT branch longest path (%zu layers, grid cells of 8x8 px):\n", dct.size());
    for (const auto& l : dct) std::printf("  %s\n", DescribeLayer(l).c_str());
    ok &= ReportLine("DCT branch (chain)", "cells", dct_rf,
                     MeasureChainReceptiveField(dct, static_cast<unsigned>(a.seed)));
    ok &= ReportLine("DCT branch (network)", "cells", dct_rf,
                     MeasureDctBranchReceptiveField(nc, a.seed));
  }
  if (!ok) {
    throw NumericFault("analytic receptive field disagrees with the impulse oracle");
  }
  return kOk;
}

int Main(int argc, char** argv) {
  CLI::App app{"dualres: dual-domain JPEG artifact removal"};
  app.require_subcommand(1);
  std::string log_level;
  app.add_option("--log-level", log_level, "error|warn|info|debug (overrides DUALRES_LOG)")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}));

  DegradeArgs degrade;
  auto* deg = app.add_subcommand("degrade", "JPEG-degrade the luma of an image");
  deg->add_option("--input", degrade.input, "Clean PNG or PGM")->required();
  deg->add_option("--output", degrade.output, "Degraded PNG")->required();
  deg->add_option("--qf", degrade.qf, "Quality factor")->required()->check(CLI::Range(1, 100));
  deg->add_option("--dump-coeffs", degrade.dump_coeffs,
                  "Write quantized coefficients here and the table to PATH.qt");

  TrainArgs train;
  auto* tr = app.add_subcommand("train", "Train on a directory of clean images");
  tr->add_option("--corpus", train.corpus, "Directory of clean PNG/PGM images")->required();
  tr->add_option("--config", train.config, "JSON config with network/train sections");
  tr->add_option("--init-checkpoint", train.init_checkpoint, "Warm-start checkpoint");
  tr->add_option("--out", train.out, "Output checkpoint")->required();
  tr->add_option("--log", train.log, "JSON-lines training log (default OUT.log.jsonl)");
  tr->add_option("--lr-init", train.lr_init);
  tr->add_option("--lr-decay-factor", train.lr_decay_factor);
  tr->add_option("--plateau-patience", train.plateau_patience);
  tr->add_option("--batch-size", train.batch_size);
  tr->add_option("--curriculum", train.curriculum, "PATCH:QF:STEPS[,PATCH:QF:STEPS...]");
  tr->add_option("--adam-beta1", train.adam_beta1);
  tr->add_option("--adam-beta2", train.adam_beta2);
  tr->add_option("--adam-eps", train.adam_eps);
  tr->add_option("--seed", train.seed);
  tr->add_option("--val-fraction", train.val_fraction);
  tr->add_option("--val-interval", train.val_interval);
  tr->add_option("--val-patches", train.val_patches);
  tr->add_option("--fixed-batch", train.fixed_batch, "true|false");
  tr->add_option("--base-channels", train.base_channels);
  tr->add_option("--dilations", train.dilations, "Bottleneck dilations")->delimiter(',');
  tr->add_option("--lambda", train.lambda);
  tr->add_option("--theta", train.theta);

  RestoreArgs restore;
  auto* rs = app.add_subcommand("restore", "Restore a degraded image");
  rs->add_option("--input", restore.input, "Degraded PNG or PGM")->required();
  rs->add_option("--qf", restore.qf, "Quality factor the image was degraded at")
      ->check(CLI::Range(1, 100));
  rs->add_option("--coeffs", restore.coeffs, "Coefficient dump from degrade --dump-coeffs");
  rs->add_option("--checkpoint", restore.checkpoint)->required();
  rs->add_option("--output", restore.output, "Restored PNG")->required();

  EvalArgs eval;
  auto* ev = app.add_subcommand("eval", "PSNR / SSIM / PSNR-B over a directory");
  ev->add_option("--clean-dir", eval.clean_dir)->required();
  ev->add_option("--test-dir", eval.test_dir, "Images to score, paired by filename");
  ev->add_option("--checkpoint", eval.checkpoint, "Degrade at --qf and restore with this");
  ev->add_option("--qf", eval.qf, "Alone: score the JPEG baseline")->check(CLI::Range(1, 100));
  ev->add_option("--report", eval.report, "Write filename,psnr,ssim,psnr_b CSV here");

  RfArgs rf;
  auto* rfc = app.add_subcommand("rf-report", "Analytic vs impulse receptive field");
  rfc->add_option("--config", rf.config, "JSON config with a network section");
  rfc->add_option("--layers", rf.layers, "Plain chain instead, e.g. c3,c3d2,c3d4");
  rfc->add_option("--seed", rf.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  if (!log_level.empty()) {
    LogLevel level;
    ParseLogLevel(log_level, &level);
    SetLogLevel(level);
  }

  try {
    if (deg->parsed()) return RunDegrade(degrade);
    if (tr->parsed()) return RunTrain(train);
    if (rs->parsed()) return RunRestore(restore);
    if (ev->parsed()) return RunEval(eval);
    if (rfc->parsed()) return RunRfReport(rf);
  } catch (const CliUsageError& e) {
    Log(LogLevel::kError, e.what());
    return kUsage;
  } catch (const NumericFault& e) {
    Log(LogLevel::kError, e.what());
    return kNumeric;
  } catch (const Error& e) {
    Log(LogLevel::kError, e.what());
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    Log(LogLevel::kError, e.what());
    return kData;
  }
  return kUsage;
}

}  // namespace
}  // namespace dualres

int main(int argc, char** argv) { return dualres::Main(argc, argv); }
