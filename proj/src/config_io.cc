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

#include "dualres/config_io.h"

#include <fstream>
#include <set>

#include "dualres/errors.h"

namespace dualres {

namespace {

using nlohmann::json;

class FieldReader {
 public:
  FieldReader(const json& j, std::string section)
      : j_(j), section_(std::move(section)) {
    if (!j_.is_object()) {
      throw ConfigError("config section '" + section_ + "' must be an object");
    }
  }

  template <typename V>
  void Read(const char* key, V* out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      *out = it->template get<V>();
    } catch (const json::exception&) {
      throw ConfigError("config field '" + Qualified(key) +
                        "' has the wrong type: " + it->dump());
    }
  }

  void RejectUnknown() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.contains(it.key())) {
        throw ConfigError("unknown config field '" + Qualified(it.key()) + "'");
      }
    }
  }

 private:
  std::string Qualified(const std::string& key) const {
    return section_.empty() ? key : section_ + "." + key;
  }

  const json& j_;
  std::string section_;
  std::set<std::string, std::less<>> seen_;
};

}  // namespace

json NetworkConfigToJson(const NetworkConfig& c) {
  return json{{"pixel_depth", c.pixel_depth},
              {"dct_depth", c.dct_depth},
              {"base_channels", c.base_channels},
              {"bottleneck_dilations", c.bottleneck_dilations},
              {"r_init", c.r_init},
              {"prelu_init", c.prelu_init},
              {"output_init_scale", c.output_init_scale},
              {"lambda", c.lambda},
              {"theta", c.theta},
              {"scales", c.scales},
              {"pixel_scale", c.pixel_scale},
              {"pixel_offset", c.pixel_offset},
              {"coeff_scale", c.coeff_scale}};
}

NetworkConfig NetworkConfigFromJson(const json& j) {
  NetworkConfig c;
  FieldReader r(j, "network");
  r.Read("pixel_depth", &c.pixel_depth);
  r.Read("dct_depth", &c.dct_depth);
  r.Read("base_channels", &c.base_channels);
  r.Read("bottleneck_dilations", &c.bottleneck_dilations);
  r.Read("r_init", &c.r_init);
  r.Read("prelu_init", &c.prelu_init);
  r.Read("output_init_scale", &c.output_init_scale);
  r.Read("lambda", &c.lambda);
  r.Read("theta", &c.theta);
  r.Read("scales", &c.scales);
  r.Read("pixel_scale", &c.pixel_scale);
  r.Read("pixel_offset", &c.pixel_offset);
  r.Read("coeff_scale", &c.coeff_scale);
  r.RejectUnknown();
  return c;
}

json TrainConfigToJson(const TrainConfig& c) {
  json stages = json::array();
  for (const auto& s : c.curriculum) {
    stages.push_back({{"patch_size", s.patch_size}, {"qf", s.qf}, {"steps", s.steps}});
  }
  return json{{"lr_init", c.lr_init},
              {"lr_decay_factor", c.lr_decay_factor},
              {"plateau_patience", c.plateau_patience},
              {"batch_size", c.batch_size},
              {"curriculum", stages},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"adam_eps", c.adam_eps},
              {"seed", c.seed},
              {"val_fraction", c.val_fraction},
              {"val_interval", c.val_interval},
              {"val_patches", c.val_patches},
              {"fixed_batch", c.fixed_batch}};
}

TrainConfig TrainConfigFromJson(const json& j) {
  TrainConfig c;
  FieldReader r(j, "train");
  r.Read("lr_init", &c.lr_init);
  r.Read("lr_decay_factor", &c.lr_decay_factor);
  r.Read("plateau_patience", &c.plateau_patience);
  r.Read("batch_size", &c.batch_size);
  r.Read("adam_beta1", &c.adam_beta1);
  r.Read("adam_beta2", &c.adam_beta2);
  r.Read("adam_eps", &c.adam_eps);
  r.Read("seed", &c.seed);
  r.Read("val_fraction", &c.val_fraction);
  r.Read("val_interval", &c.val_interval);
  r.Read("val_patches", &c.val_patches);
  r.Read("fixed_batch", &c.fixed_batch);
  json stages;
  r.Read("curriculum", &stages);
  if (!stages.is_null()) {
    if (!stages.is_array()) throw ConfigError("config field 'train.curriculum' must be an array");
    c.curriculum.clear();
    for (std::size_t i = 0; i < stages.size(); ++i) {
      CurriculumStage s;
      FieldReader sr(stages[i], "train.curriculum[" + std::to_string(i) + "]");
      sr.Read("patch_size", &s.patch_size);
      sr.Read("qf", &s.qf);
      sr.Read("steps", &s.steps);
      sr.RejectUnknown();
      c.curriculum.push_back(s);
    }
  }
  r.RejectUnknown();
  return c;
}

std::optional<std::string> FirstDifference(const NetworkConfig& a,
                                           const NetworkConfig& b) {
  const json ja = NetworkConfigToJson(a), jb = NetworkConfigToJson(b);
  for (auto it = ja.begin(); it != ja.end(); ++it) {
    if (jb.at(it.key()) != it.value()) return it.key();
  }
  return std::nullopt;
}

ConfigFile ReadConfigFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  ConfigFile out;
  FieldReader r(j, "");
  json network, train;
  r.Read("network", &network);
  r.Read("train", &train);
  r.RejectUnknown();
  if (!network.is_null()) out.network = NetworkConfigFromJson(network);
  if (!train.is_null()) out.train = TrainConfigFromJson(train);
  return out;
}

}  // namespace dualres
