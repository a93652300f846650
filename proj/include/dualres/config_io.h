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

// JSON encoding of NetworkConfig and TrainConfig. Decoding rejects unknown
// keys and wrong types with a ConfigError naming the field; absent keys keep
// their defaults.

#ifndef DUALRES_CONFIG_IO_H_
#define DUALRES_CONFIG_IO_H_

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "dualres/network.h"
#include "dualres/trainer.h"

namespace dualres {

nlohmann::json NetworkConfigToJson(const NetworkConfig& config);
NetworkConfig NetworkConfigFromJson(const nlohmann::json& j);

nlohmann::json TrainConfigToJson(const TrainConfig& config);
TrainConfig TrainConfigFromJson(const nlohmann::json& j);

// Name of the first field where a and b differ, or nullopt.
std::optional<std::string> FirstDifference(const NetworkConfig& a,
                                           const NetworkConfig& b);

// A config file is one JSON object with optional "network" and "train"
// sections.
struct ConfigFile {
  NetworkConfig network;
  TrainConfig train;
};
ConfigFile ReadConfigFile(const std::filesystem::path& path);

}  // namespace dualres

#endif  // DUALRES_CONFIG_IO_H_
