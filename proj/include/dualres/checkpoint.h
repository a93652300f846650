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

// Checkpoint container.
//
//   DUALRES-CKPT 1\n
//   <manifest byte length>\n
//   <JSON manifest>
//   <little-endian float32 payloads, in manifest order>
//
// The manifest holds the network config, training provenance and, per
// tensor, its name, shape and byte offset into the payload section.

#ifndef DUALRES_CHECKPOINT_H_
#define DUALRES_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "dualres/network.h"

namespace dualres {

inline constexpr std::string_view kCheckpointMagic = "DUALRES-CKPT";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  Model<float> model;
  int trained_qf = 0;  // 0 when untrained
  std::int64_t step = 0;
  std::optional<double> validation_loss;
  // Digest of the parameters the final training stage started from; empty
  // for a freshly built model.
  std::string init_digest;
};

std::string SerializeCheckpoint(const Checkpoint& checkpoint);
// source names the data in error messages.
Checkpoint ParseCheckpoint(std::string_view bytes, std::string_view source);

void SaveCheckpoint(const Checkpoint& checkpoint,
                    const std::filesystem::path& path);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

// Throws CheckpointError naming the first differing field.
void RequireSameArchitecture(const NetworkConfig& expected,
                             const NetworkConfig& actual);

}  // namespace dualres

#endif  // DUALRES_CHECKPOINT_H_
