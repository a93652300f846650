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

// Adam training of the restoration network with a plateau learning-rate
// schedule and a patch-size / quality-factor curriculum.

#ifndef DUALRES_TRAINER_H_
#define DUALRES_TRAINER_H_

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dualres/checkpoint.h"
#include "dualres/network.h"
#include "dualres/patches.h"

namespace dualres {

struct CurriculumStage {
  int patch_size = 56;
  int qf = 20;
  int steps = 500;
  bool operator==(const CurriculumStage&) const = default;
};

struct TrainConfig {
  double lr_init = 1e-3;
  double lr_decay_factor = 3.0;
  int plateau_patience = 3;
  int batch_size = 8;
  std::vector<CurriculumStage> curriculum{{56, 20, 500}};
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;
  double val_fraction = 0.1;
  int val_interval = 50;
  int val_patches = 8;
  // Draw one batch per stage and train on it for every step; validation then
  // runs on that same batch.
  bool fixed_batch = false;

  // Throws ConfigError naming the offending field.
  void Validate() const;
  bool operator==(const TrainConfig&) const = default;
};

template <typename T>
struct AdamState {
  struct Moments {
    std::vector<T> m;
    std::vector<T> v;
  };
  std::map<std::string, Moments> moments;
  std::int64_t step = 0;

  static AdamState For(std::span<const NamedParameter<T>> params);
};

// One bias-corrected Adam update. grads and state must cover exactly the
// parameter names; a mismatch throws ArgumentError naming the parameter.
template <typename T>
void AdamStep(std::span<NamedParameter<T>> params,
              const std::map<std::string, std::vector<T>>& grads,
              AdamState<T>& state, double lr, const TrainConfig& config);

// "Stops decreasing": patience consecutive observations without a new
// minimum divide the rate by factor and restart the count.
class PlateauScheduler {
 public:
  PlateauScheduler(double lr, double factor, int patience)
      : lr_(lr), factor_(factor), patience_(patience) {}

  // Returns true if this observation triggered a decay.
  bool Observe(double loss);
  double lr() const { return lr_; }
  double best() const { return best_; }

 private:
  double lr_;
  double factor_;
  int patience_;
  double best_ = std::numeric_limits<double>::infinity();
  int stale_ = 0;
};

struct BatchTensors {
  NetworkInput<float> input;
  Tensor<float> clean;
};
BatchTensors MakeBatch(const PatchBatch& batch);

// Mean multi-scale training loss over the batch without recording a tape.
template <typename T>
double ValidationLoss(const Model<T>& model, const PatchBatch& batch);

struct TrainLogRecord {
  std::int64_t step = 0;  // global step count
  int stage = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;

  std::string ToJson() const;
};

struct StageSummary {
  std::string start_digest;
  std::string best_digest;
  double best_val_loss = 0.0;
};

struct TrainResult {
  // Best-validation model of the final stage.
  Checkpoint checkpoint;
  std::vector<TrainLogRecord> log;
  std::vector<StageSummary> stages;
  std::vector<double> train_losses;  // one per step
  // Validation patches of the final stage; with fixed_batch this is the
  // training batch itself.
  PatchBatch final_val_batch;
  double final_lr = 0.0;
};

using TrainLogSink = std::function<void(const TrainLogRecord&)>;

// corpus: clean images. init, if given, must match network; otherwise the
// model is built from network and config.seed.
TrainResult Train(std::span<const NamedImage> corpus, const TrainConfig& config,
                  const NetworkConfig& network,
                  const std::optional<Checkpoint>& init,
                  const TrainLogSink& sink = {});

}  // namespace dualres

#endif  // DUALRES_TRAINER_H_
