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

#include "dualres/trainer.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "json.hpp"
#include "dualres/errors.h"
#include "dualres/fileutil.h"
#include "dualres/log.h"
#include "dualres/ops.h"

namespace dualres {

namespace {

enum class Stream : std::uint32_t { kSplit = 1, kTrain = 2, kVal = 3, kFixed = 4 };

std::uint64_t DeriveSeed(std::uint64_t seed, Stream stream, std::uint64_t stage,
                         std::uint64_t step) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stage),
                    static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

template <typename T>
struct TypedBatch {
  NetworkInput<T> input;
  Tensor<T> clean;
};

template <typename T>
TypedBatch<T> BuildBatch(const PatchBatch& batch) {
  if (batch.patches.empty()) throw ArgumentError("empty patch batch");
  std::vector<const ImagePlane*> degraded, clean;
  std::vector<const CoeffGrid*> cdct;
  std::vector<const QuantTable*> tables;
  for (const auto& p : batch.patches) {
    degraded.push_back(&p.degraded);
    clean.push_back(&p.clean);
    cdct.push_back(&p.cdct);
    tables.push_back(&p.table);
  }
  return {MakeNetworkInput<T>(degraded, cdct, tables), StackPlanes<T>(clean)};
}

}  // namespace

void TrainConfig::Validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("train config field '" + field + "' " + why);
  };
  if (!(lr_init > 0.0) || !std::isfinite(lr_init)) fail("lr_init", "must be positive");
  if (!(lr_decay_factor > 1.0) || !std::isfinite(lr_decay_factor)) {
    fail("lr_decay_factor", "must exceed 1");
  }
  if (plateau_patience < 1) fail("plateau_patience", "must be at least 1");
  if (batch_size < 1) fail("batch_size", "must be at least 1");
  if (curriculum.empty()) fail("curriculum", "is empty");
  for (std::size_t i = 0; i < curriculum.size(); ++i) {
    const auto& s = curriculum[i];
    const std::string name = "curriculum[" + std::to_string(i) + "]";
    if (s.patch_size < kBlock || s.patch_size % kBlock != 0) {
      fail(name + ".patch_size", "must be a positive multiple of 8");
    }
    if (s.qf < 1 || s.qf > 100) fail(name + ".qf", "must be in 1..100");
    if (s.steps < 0) fail(name + ".steps", "must be nonnegative");
    if (i > 0 && curriculum[i - 1].qf == s.qf &&
        curriculum[i - 1].patch_size > s.patch_size) {
      fail(name + ".patch_size", "decreases within a quality-factor stage");
    }
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) fail("adam_beta1", "must lie in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) fail("adam_beta2", "must lie in [0, 1)");
  if (!(adam_eps > 0.0)) fail("adam_eps", "must be positive");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) fail("val_fraction", "must lie in [0, 1)");
  if (val_interval < 1) fail("val_interval", "must be at least 1");
  if (val_patches < 1) fail("val_patches", "must be at least 1");
}

template <typename T>
AdamState<T> AdamState<T>::For(std::span<const NamedParameter<T>> params) {
  AdamState state;
  for (const auto& p : params) {
    state.moments[p.name] = {std::vector<T>(p.tensor.numel()), std::vector<T>(p.tensor.numel())};
  }
  return state;
}

template <typename T>
void AdamStep(std::span<NamedParameter<T>> params,
              const std::map<std::string, std::vector<T>>& grads, AdamState<T>& state,
              double lr, const TrainConfig& config) {
  for (const auto& p : params) {
    auto g = grads.find(p.name);
    if (g == grads.end()) throw ArgumentError("no gradient for parameter '" + p.name + "'");
    if (g->second.size() != p.tensor.numel()) {
      throw ArgumentError("gradient size mismatch for parameter '" + p.name + "'");
    }
    auto s = state.moments.find(p.name);
    if (s == state.moments.end() || s->second.m.size() != p.tensor.numel()) {
      throw ArgumentError("optimizer state lacks parameter '" + p.name + "'");
    }
  }
  if (grads.size() != params.size() || state.moments.size() != params.size()) {
    for (const auto& [name, unused] : grads) {
      if (std::none_of(params.begin(), params.end(),
                       [&](const auto& p) { return p.name == name; })) {
        throw ArgumentError("gradient for unknown parameter '" + name + "'");
      }
    }
    for (const auto& [name, unused] : state.moments) {
      if (std::none_of(params.begin(), params.end(),
                       [&](const auto& p) { return p.name == name; })) {
        throw ArgumentError("optimizer state for unknown parameter '" + name + "'");
      }
    }
  }
  const std::int64_t t = ++state.step;
  const double b1 = config.adam_beta1, b2 = config.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
  for (auto& p : params) {
    const auto& g = grads.at(p.name);
    auto& mom = state.moments.at(p.name);
    auto w = p.tensor.mutable_data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i];
      const double m = b1 * mom.m[i] + (1.0 - b1) * gi;
      const double v = b2 * mom.v[i] + (1.0 - b2) * gi * gi;
      mom.m[i] = static_cast<T>(m);
      mom.v[i] = static_cast<T>(v);
      w[i] = static_cast<T>(w[i] - lr * (m / c1) / (std::sqrt(v / c2) + config.adam_eps));
    }
  }
}

bool PlateauScheduler::Observe(double loss) {
  if (loss < best_) {
    best_ = loss;
    stale_ = 0;
    return false;
  }
  if (++stale_ < patience_) return false;
  lr_ /= factor_;
  stale_ = 0;
  return true;
}

BatchTensors MakeBatch(const PatchBatch& batch) {
  auto b = BuildBatch<float>(batch);
  return {std::move(b.input), std::move(b.clean)};
}

template <typename T>
double ValidationLoss(const Model<T>& model, const PatchBatch& batch) {
  const auto b = BuildBatch<T>(batch);
  const auto out = Forward<T>(model, b.input, nullptr);
  return static_cast<double>(Loss<T>(nullptr, out, b.clean, model.config()).item());
}

std::string TrainLogRecord::ToJson() const {
  return nlohmann::json{{"step", step},
                        {"stage", stage},
                        {"lr", lr},
                        {"train_loss", train_loss},
                        {"val_loss", val_loss}}
      .dump();
}

TrainResult Train(std::span<const NamedImage> corpus, const TrainConfig& config,
                  const NetworkConfig& network, const std::optional<Checkpoint>& init,
                  const TrainLogSink& sink) {
  config.Validate();
  network.Validate();
  if (corpus.empty()) throw ConfigError("training corpus is empty");

  Model<float> model;
  if (init) {
    try {
      RequireSameArchitecture(network, init->model.config());
    } catch (const CheckpointError& e) {
      throw ConfigError(std::string("initial checkpoint does not match: ") + e.what());
    }
    model = init->model;
  } else {
    model = Model<float>::Build(network, config.seed);
  }

  // Fixed holdout of whole images.
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(),
               std::mt19937_64(DeriveSeed(config.seed, Stream::kSplit, 0, 0)));
  std::size_t n_val = config.fixed_batch
                          ? 0
                          : static_cast<std::size_t>(
                                std::lround(config.val_fraction * static_cast<double>(corpus.size())));
  n_val = std::min(n_val, corpus.size() - 1);
  std::vector<NamedImage> train_set, val_set;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_val ? val_set : train_set).push_back(corpus[order[i]]);
  }
  std::sort(train_set.begin(), train_set.end(),
            [](const auto& a, const auto& b) { return a.name < b.name; });
  std::sort(val_set.begin(), val_set.end(),
            [](const auto& a, const auto& b) { return a.name < b.name; });
  if (val_set.empty() && !config.fixed_batch) {
    LogWarn("validation holdout is empty; validating on training images");
    val_set = train_set;
  }

  TrainResult result;
  double lr = config.lr_init;
  std::int64_t global_step = 0;
  std::string carried_digest;
  for (std::size_t s = 0; s < config.curriculum.size(); ++s) {
    const CurriculumStage& stage = config.curriculum[s];
    StageSummary summary;
    summary.start_digest = HexDigest(model.Digest());
    if (s > 0 && summary.start_digest != carried_digest) {
      throw NumericFault("stage " + std::to_string(s) + " did not start from stage " +
                         std::to_string(s - 1) + "'s model");
    }
    LogInfo("stage " + std::to_string(s) + ": patch " + std::to_string(stage.patch_size) +
            ", qf " + std::to_string(stage.qf) + ", " + std::to_string(stage.steps) +
            " steps, start digest " + summary.start_digest);

    std::optional<PatchBatch> fixed;
    if (config.fixed_batch) {
      fixed = SamplePatches(train_set, stage.patch_size, config.batch_size, stage.qf,
                            DeriveSeed(config.seed, Stream::kFixed, s, 0));
    }
    const PatchBatch val_batch =
        fixed ? *fixed
              : SamplePatches(val_set, stage.patch_size, config.val_patches, stage.qf,
                              DeriveSeed(config.seed, Stream::kVal, s, 0));

    PlateauScheduler scheduler(lr, config.lr_decay_factor, config.plateau_patience);
    AdamState<float> state = AdamState<float>::For(model.parameters());
    Model<float> best = model;
    double best_val = ValidationLoss(model, val_batch);
    std::int64_t best_step = global_step;
    scheduler.Observe(best_val);

    for (int t = 1; t <= stage.steps; ++t) {
      const PatchBatch batch =
          fixed ? *fixed
                : SamplePatches(train_set, stage.patch_size, config.batch_size, stage.qf,
                                DeriveSeed(config.seed, Stream::kTrain, s, t));
      const BatchTensors bt = MakeBatch(batch);
      Tape<float> tape;
      const auto out = Forward(model, bt.input, &tape);
      const Tensor<float> loss = Loss(&tape, out, bt.clean, model.config());
      const double train_loss = loss.item();
      Gradients<float> grads = tape.Backward(loss);
      std::map<std::string, std::vector<float>> by_name;
      for (const auto& p : model.parameters()) by_name[p.name] = grads.Get(p.tensor);
      AdamStep<float>(model.parameters(), by_name, state, scheduler.lr(), config);
      ++global_step;
      result.train_losses.push_back(train_loss);

      if (t % config.val_interval == 0 || t == stage.steps) {
        const double val = ValidationLoss(model, val_batch);
        if (scheduler.Observe(val)) {
          LogInfo("validation plateau at step " + std::to_string(global_step) +
                  ", learning rate now " + std::to_string(scheduler.lr()));
        }
        if (val < best_val) {
          best_val = val;
          best = model;
          best_step = global_step;
        }
        TrainLogRecord rec{global_step, static_cast<int>(s), scheduler.lr(), train_loss, val};
        result.log.push_back(rec);
        if (sink) sink(rec);
      }
    }
    lr = scheduler.lr();
    summary.best_digest = HexDigest(best.Digest());
    summary.best_val_loss = best_val;
    result.stages.push_back(summary);
    model = std::move(best);
    carried_digest = summary.best_digest;

    result.checkpoint.trained_qf = stage.qf;
    result.checkpoint.step = best_step;
    result.checkpoint.validation_loss = best_val;
    result.checkpoint.init_digest = summary.start_digest;
    result.final_val_batch = val_batch;
  }
  result.checkpoint.model = std::move(model);
  result.final_lr = lr;
  return result;
}

template struct AdamState<float>;
template struct AdamState<double>;
template void AdamStep<float>(std::span<NamedParameter<float>>,
                              const std::map<std::string, std::vector<float>>&,
                              AdamState<float>&, double, const TrainConfig&);
template void AdamStep<double>(std::span<NamedParameter<double>>,
                               const std::map<std::string, std::vector<double>>&,
                               AdamState<double>&, double, const TrainConfig&);
template double ValidationLoss<float>(const Model<float>&, const PatchBatch&);
template double ValidationLoss<double>(const Model<double>&, const PatchBatch&);

}  // namespace dualres
