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

// Acceptance suite. Usage: dualres_acceptance [N...]; with no arguments every
// criterion runs. Prints one PASS/FAIL line per criterion and exits nonzero if
// any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "dualres/checkpoint.h"
#include "dualres/errors.h"
#include "dualres/jpeg.h"
#include "dualres/metrics.h"
#include "dualres/network.h"
#include "dualres/ops.h"
#include "dualres/patches.h"
#include "dualres/receptive_field.h"
#include "dualres/trainer.h"
#include "test_support.h"

namespace dualres {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

// Pinned tolerances.
constexpr double kPsnrTol = 0.15;
constexpr double kSsimTol = 0.010;
constexpr double kPsnrBTol = 0.30;
constexpr double kRoundTripTol = 1e-10;
constexpr double kOperatorGradTol = 1e-4;
constexpr double kEndToEndGradTol = 1e-3;
constexpr double kFdStep = 1e-6;
constexpr double kLossDropFactor = 10.0;
constexpr double kPsnrGainDb = 0.5;

// Smoke configuration shared by criteria 9 and 10.
constexpr int kSmokeWidth = 32;
constexpr int kSmokePatch = 56;
constexpr int kSmokeQf = 20;
constexpr int kSmokeSteps = 500;
constexpr int kSmokeBatch = 8;
constexpr std::uint64_t kSmokeSeed = 1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string Fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

fs::path DatasetDir(const char* env, const fs::path& fallback) {
  if (const char* v = std::getenv(env); v != nullptr && *v) return v;
  return fs::path(DUALRES_SOURCE_DIR) / fallback;
}

struct BaselineTarget {
  int qf;
  double psnr, ssim, psnr_b;
};

Outcome JpegBaseline(const char* env, const fs::path& fallback, std::size_t expect_count,
                     std::vector<BaselineTarget> targets, double budget_s) {
  const fs::path dir = DatasetDir(env, fallback);
  if (!fs::is_directory(dir)) {
    return {false, "dataset not found at " + dir.string() + " (set " + env + ")"};
  }
  const auto start = Clock::now();
  bool ok = true;
  std::string detail;
  for (const auto& t : targets) {
    const MetricReport r = EvaluateJpegBaseline(dir, t.qf);
    const bool good = std::abs(r.mean_psnr - t.psnr) <= kPsnrTol &&
                      std::abs(r.mean_ssim - t.ssim) <= kSsimTol &&
                      std::abs(r.mean_psnr_b - t.psnr_b) <= kPsnrBTol &&
                      (expect_count == 0 || r.count() == expect_count);
    ok &= good;
    detail += Fmt("qf %d: %zu images, %.2f/%.3f/%.2f vs %.2f/%.3f/%.2f; ", t.qf, r.count(),
                  r.mean_psnr, r.mean_ssim, r.mean_psnr_b, t.psnr, t.ssim, t.psnr_b);
  }
  const double s = Seconds(start);
  ok &= s < budget_s;
  return {ok, detail + Fmt("%.1f s", s)};
}

Outcome Criterion1() {
  return JpegBaseline("DUALRES_LIVE1_DIR", "data/LIVE1", 29,
                      {{10, 27.77, 0.791, 25.33}, {20, 30.07, 0.868, 27.57}}, 120.0);
}

Outcome Criterion2() {
  return JpegBaseline("DUALRES_BSDS500_DIR", "data/BSDS500/test", 0,
                      {{10, 27.80, 0.788, 25.10}, {20, 30.05, 0.867, 27.22}}, 300.0);
}

Outcome Criterion3() {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> blocks(1, 6);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const ImagePlane p = testing::RandomPlane(rng, 8 * blocks(rng), 8 * blocks(rng));
    const ImagePlane back = BlockIdct(BlockDct(p));
    for (std::size_t k = 0; k < p.size(); ++k) {
      worst = std::max(worst, std::abs(back.samples[k] - p.samples[k]));
    }
  }
  return {worst < kRoundTripTol, Fmt("1000 planes, max abs error %.3g", worst)};
}

std::string ReadText(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome Criterion4() {
  bool ok = true;
  std::string detail;
  for (int qf : {10, 20, 50, 100}) {
    const fs::path f = fs::path(DUALRES_TEST_DATA) / ("luma_q" + std::to_string(qf) + ".txt");
    const bool same = ReadText(f) == FormatQuantTable(LuminanceTable(qf));
    ok &= same;
    detail += Fmt("q%d %s ", qf, same ? "equal" : "DIFFERS");
  }
  return {ok, detail};
}

Outcome Criterion5() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pix(0.0, 255.0), unit(0.0, 1.0), wide(-600.0, 600.0);
  std::uniform_int_distribution<int> step(1, 255);
  long violations = 0;
  constexpr int kSamples = 100000;
  for (int s = 0; s < kSamples; ++s) {
    ImagePlane o(8, 8);
    for (double& v : o.samples) v = pix(rng);
    QuantTable q;
    for (int& v : q.steps) v = step(rng);
    const CoeffGrid orig = BlockDct(o);
    const CoeffGrid cdct = Quantize(orig, q);
    CoeffGrid x = orig;
    for (double& v : x.coeffs) v = wide(rng);
    const CoeffGrid px = DruProject(x, cdct, q);
    const CoeffGrid ppx = DruProject(px, cdct, q);
    const CoeffGrid fixed = DruProject(orig, cdct, q);
    double dist_p = 0.0, dist_y = 0.0;
    for (int k = 0; k < kBlockArea; ++k) {
      const double lo = cdct.coeffs[k] - 0.5 * q.steps[k];
      const double hi = cdct.coeffs[k] + 0.5 * q.steps[k];
      if (ppx.coeffs[k] != px.coeffs[k]) ++violations;              // idempotent
      if (px.coeffs[k] < lo || px.coeffs[k] > hi) ++violations;     // in the box
      if (fixed.coeffs[k] != orig.coeffs[k]) ++violations;          // fixed point
      const double y = lo + unit(rng) * (hi - lo);
      dist_p += (px.coeffs[k] - x.coeffs[k]) * (px.coeffs[k] - x.coeffs[k]);
      dist_y += (y - x.coeffs[k]) * (y - x.coeffs[k]);
    }
    if (dist_p > dist_y) ++violations;  // nearest point of the box
  }
  return {violations == 0, Fmt("%d samples, %ld violations", kSamples, violations)};
}

Tensor<double> Probe(Tape<double>* tape, const Tensor<double>& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return WeightedSum(tape, y, testing::RandomTensor<double>(rng, y.shape(), -1, 1, false));
}

Outcome Criterion6() {
  const auto start = Clock::now();
  std::mt19937_64 rng(6);
  auto R = [&](Shape s, double lo = -1, double hi = 1) {
    return testing::RandomTensor<double>(rng, std::move(s), lo, hi);
  };
  Tensor<double> x = R({2, 3, 9, 8}), w = R({4, 3, 3, 3}), b = R({4});
  Tensor<double> tx = R({2, 3, 5, 6}), tw = R({3, 2, 4, 4}), tb = R({2});
  Tensor<double> px = R({2, 3, 4, 4}), slope = R({3}, 0.05, 0.5);
  Tensor<double> a = R({2, 2, 4, 4}), c = R({2, 2, 4, 4}), d = R({2, 1, 4, 4}), s = R({1});
  Tensor<double> coef = R({1, 64, 2, 2}, -3, 3), img = R({2, 1, 16, 8});
  const Tensor<double> lo = testing::RandomTensor<double>(rng, {1, 64, 2, 2}, -2, 0, false);
  const Tensor<double> hi = testing::RandomTensor<double>(rng, {1, 64, 2, 2}, 0, 2, false);
  using Build = std::function<Tensor<double>(Tape<double>*)>;
  struct Check {
    const char* op;
    Tensor<double>* wrt;
    Build build;
  };
  const ConvGeometry dil{1, 2, 2}, strided{2, 1, 1};
  std::vector<Check> checks = {
      {"conv2d/x", &x, [&](auto* t) { return Probe(t, Conv2d(t, x, w, b, dil), 1); }},
      {"conv2d/w", &w, [&](auto* t) { return Probe(t, Conv2d(t, x, w, b, strided), 2); }},
      {"conv2d/b", &b, [&](auto* t) { return Probe(t, Conv2d(t, x, w, b, dil), 3); }},
      {"conv2d_transpose/x", &tx, [&](auto* t) { return Probe(t, Conv2dTranspose(t, tx, tw, tb, 2, 1), 4); }},
      {"conv2d_transpose/w", &tw, [&](auto* t) { return Probe(t, Conv2dTranspose(t, tx, tw, tb, 2, 1), 5); }},
      {"conv2d_transpose/b", &tb, [&](auto* t) { return Probe(t, Conv2dTranspose(t, tx, tw, tb, 2, 1), 6); }},
      {"prelu/x", &px, [&](auto* t) { return Probe(t, PRelu(t, px, slope), 7); }},
      {"prelu/slope", &slope, [&](auto* t) { return Probe(t, PRelu(t, px, slope), 8); }},
      {"add", &a, [&](auto* t) { return Probe(t, Add(t, a, c), 9); }},
      {"sub", &c, [&](auto* t) { return Probe(t, Sub(t, a, c), 10); }},
      {"scale/x", &a, [&](auto* t) { return Probe(t, Scale(t, a, s), 11); }},
      {"scale/s", &s, [&](auto* t) { return Probe(t, Scale(t, a, s), 12); }},
      {"affine", &a, [&](auto* t) { return Probe(t, Affine(t, a, -2.5, 3.0), 13); }},
      {"concat", &d, [&](auto* t) { return Probe(t, ConcatChannels(t, a, d), 14); }},
      {"mse", &a, [&](auto* t) { return Mse(t, a, c); }},
      {"avg_pool", &a, [&](auto* t) { return Probe(t, AvgPool(t, a, 2), 15); }},
      {"box_clamp", &coef, [&](auto* t) { return Probe(t, BoxClamp(t, coef, lo, hi), 16); }},
      {"block_dct", &img, [&](auto* t) { return Probe(t, BlockDctLayer(t, img), 17); }},
      {"block_idct", &coef, [&](auto* t) { return Probe(t, BlockIdctLayer(t, coef), 18); }},
      {"weighted_sum", &a, [&](auto* t) { return Probe(t, a, 19); }},
  };
  bool ok = true;
  double worst_op = 0.0;
  std::string failed;
  for (auto& ch : checks) {
    const double e = testing::MaxGradientError(rng, *ch.wrt, ch.build, 30, kFdStep);
    worst_op = std::max(worst_op, e);
    if (!(e < kOperatorGradTol)) {
      ok = false;
      failed += std::string(ch.op) + " ";
    }
  }

  // Full loss on an 8x8 input.
  NetworkConfig cfg;
  cfg.base_channels = 2;
  auto model = Model<double>::Build(cfg, 6);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  for (auto& p : model.parameters()) {
    if (p.name == "mix.r") continue;
    for (double& v : p.tensor.mutable_data()) v += u(rng);
  }
  const Degraded deg = Degrade(testing::NaturalishPlane(6, 8, 8), 30);
  const auto input = MakeNetworkInput<double>(deg.degraded, deg.cdct, deg.table);
  const ImagePlane clean = testing::NaturalishPlane(7, 8, 8);
  const ImagePlane* cp[] = {&clean};
  const Tensor<double> target = StackPlanes<double>(cp);
  const Build loss = [&](Tape<double>* t) {
    return Loss(t, Forward(model, input, t), target, model.config());
  };
  double worst_e2e = 0.0;
  for (auto& p : model.parameters()) {
    worst_e2e = std::max(worst_e2e, testing::MaxGradientError(rng, p.tensor, loss, 3, kFdStep));
  }
  if (!(worst_e2e < kEndToEndGradTol)) {
    ok = false;
    failed += "end-to-end ";
  }
  const double secs = Seconds(start);
  ok &= secs < 120.0;
  return {ok, Fmt("%zu operator checks, max rel err %.2e; end-to-end over %zu tensors %.2e; "
                  "%.1f s%s%s",
                  checks.size(), worst_op, model.parameters().size(), worst_e2e, secs,
                  failed.empty() ? "" : "; failed: ", failed.c_str())};
}

Outcome Criterion7() {
  const auto start = Clock::now();
  const NetworkConfig cfg;
  const auto path = PixelBranchLayerPath(cfg);
  const ReceptiveField analytic = AnalyticReceptiveField(path);
  const ReceptiveField chain = MeasureChainReceptiveField(path);
  const ReceptiveField network = MeasurePixelBranchReceptiveField(cfg);
  const double secs = Seconds(start);
  const bool ok = network.height >= 145 && network.width >= 145 && network == analytic &&
                  chain == analytic && secs < 60.0;
  return {ok, Fmt("analytic %dx%d, chain oracle %dx%d, network oracle %dx%d, %.1f s",
                  analytic.height, analytic.width, chain.height, chain.width, network.height,
                  network.width, secs)};
}

Outcome Criterion8() {
  const std::vector<LayerSpec> chain = {LayerSpec::Conv(3, 1), LayerSpec::Conv(3, 2),
                                        LayerSpec::Conv(3, 4)};
  const ReceptiveField m = MeasureChainReceptiveField(chain);
  const ReceptiveField a = AnalyticReceptiveField(chain);
  return {m == ReceptiveField{15, 15} && a == m,
          Fmt("impulse footprint %dx%d, recurrence %dx%d", m.height, m.width, a.height, a.width)};
}

NetworkConfig SmokeNetwork() {
  NetworkConfig cfg;
  cfg.base_channels = kSmokeWidth;
  return cfg;
}

TrainConfig SmokeTrain() {
  TrainConfig cfg;
  cfg.fixed_batch = true;
  cfg.batch_size = kSmokeBatch;
  cfg.curriculum = {{kSmokePatch, kSmokeQf, kSmokeSteps}};
  cfg.seed = kSmokeSeed;
  return cfg;
}

fs::path CorpusDir() { return fs::path(DUALRES_TEST_DATA) / "corpus"; }

Outcome Criterion9() {
  const auto start = Clock::now();
  const auto corpus = LoadCorpus(CorpusDir());
  const TrainResult r = Train(corpus, SmokeTrain(), SmokeNetwork(), std::nullopt);
  const double secs = Seconds(start);
  const double drop = r.train_losses.front() / r.train_losses.back();
  double base = 0.0, restored = 0.0;
  for (const Patch& p : r.final_val_batch.patches) {
    base += Psnr(p.clean, p.degraded);
    restored += Psnr(p.clean, Restore(r.checkpoint.model, p.degraded, p.cdct, p.table));
  }
  const double n = static_cast<double>(r.final_val_batch.patches.size());
  base /= n;
  restored /= n;
  const Checkpoint back = ParseCheckpoint(SerializeCheckpoint(r.checkpoint), "memory");
  const bool ok = drop >= kLossDropFactor && restored - base >= kPsnrGainDb && secs < 600.0 &&
                  back.model.Digest() == r.checkpoint.model.Digest();
  return {ok, Fmt("width %d, loss %.1f -> %.2f (%.0fx), PSNR %.2f -> %.2f dB (%+.2f), %.0f s",
                  kSmokeWidth, r.train_losses.front(), r.train_losses.back(), drop, base,
                  restored, restored - base, secs)};
}

int RunCli(const std::string& args) {
  const std::string cmd = std::string("'") + DUALRES_CLI + "' --log-level warn " + args;
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome Criterion10() {
  const fs::path dir = fs::temp_directory_path() / ("dualres_accept10_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string train = Fmt(
      "train --corpus '%s' --curriculum %d:%d:%d --batch-size %d --fixed-batch true "
      "--base-channels %d --seed %llu --out ",
      CorpusDir().c_str(), kSmokePatch, kSmokeQf, kSmokeSteps, kSmokeBatch, kSmokeWidth,
      static_cast<unsigned long long>(kSmokeSeed));
  const auto start = Clock::now();
  const int a = RunCli(train + "'" + (dir / "a.ckpt").string() + "' > /dev/null");
  const int b = RunCli(train + "'" + (dir / "b.ckpt").string() + "' > /dev/null");
  const double secs = Seconds(start);
  if (a != 0 || b != 0) {
    fs::remove_all(dir);
    return {false, Fmt("training invocations exited %d and %d", a, b)};
  }
  const std::string bytes_a = Slurp(dir / "a.ckpt"), bytes_b = Slurp(dir / "b.ckpt");
  const bool identical = bytes_a == bytes_b;

  const Checkpoint loaded = LoadCheckpoint(dir / "a.ckpt");
  SaveCheckpoint(loaded, dir / "c.ckpt");
  const Checkpoint reloaded = LoadCheckpoint(dir / "c.ckpt");
  const auto corpus = LoadCorpus(CorpusDir());
  const PatchBatch batch = SamplePatches(corpus, kSmokePatch, kSmokeBatch, kSmokeQf, 99);
  const BatchTensors bt = MakeBatch(batch);
  const auto o1 = Forward<float>(loaded.model, bt.input, nullptr).o0;
  const auto o2 = Forward<float>(reloaded.model, bt.input, nullptr).o0;
  const bool same_forward =
      o1.numel() == o2.numel() &&
      std::memcmp(o1.data().data(), o2.data().data(), o1.numel() * sizeof(float)) == 0;
  const bool same_file = Slurp(dir / "c.ckpt") == bytes_a;
  fs::remove_all(dir);
  return {identical && same_forward && same_file,
          Fmt("checkpoints %s (%zu bytes), save/load forward %s, resave %s, %.0f s",
              identical ? "byte-identical" : "DIFFER", bytes_a.size(),
              same_forward ? "bit-identical" : "DIFFERS", same_file ? "identical" : "DIFFERS",
              secs)};
}

const char* const kNames[] = {
    "",
    "JPEG baseline on LIVE1",
    "JPEG baseline on BSDS500 test",
    "DCT round trip",
    "quantization-table fixtures",
    "DRU properties",
    "gradient checks",
    "receptive field of the pixel branch",
    "dilated stack footprint",
    "overfit smoke training",
    "determinism",
};

int Run(int n) {
  static const std::function<Outcome()> kCriteria[] = {
      nullptr,    Criterion1, Criterion2, Criterion3, Criterion4,  Criterion5,
      Criterion6, Criterion7, Criterion8, Criterion9, Criterion10,
  };
  Outcome o;
  try {
    o = kCriteria[n]();
  } catch (const std::exception& e) {
    o = {false, std::string("error: ") + e.what()};
  }
  std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", n, kNames[n],
              o.detail.c_str());
  std::fflush(stdout);
  return o.pass ? 0 : 1;
}

}  // namespace
}  // namespace dualres

int main(int argc, char** argv) {
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) {
    const int n = std::atoi(argv[i]);
    if (n < 1 || n > 10) {
      std::fprintf(stderr, "criterion must be 1..10, got '%s'\n", argv[i]);
      return 2;
    }
    which.push_back(n);
  }
  if (which.empty()) {
    for (int n = 1; n <= 10; ++n) which.push_back(n);
  }
  int failures = 0;
  for (int n : which) failures += dualres::Run(n);
  return failures == 0 ? 0 : 1;
}
