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

#include "dualres/checkpoint.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"
#include "dualres/config_io.h"
#include "dualres/errors.h"
#include "dualres/fileutil.h"

namespace dualres {

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are little-endian float32");

}  // namespace

std::string SerializeCheckpoint(const Checkpoint& ck) {
  json tensors = json::array();
  std::size_t offset = 0;
  for (const auto& p : ck.model.parameters()) {
    const std::size_t bytes = p.tensor.numel() * sizeof(float);
    tensors.push_back({{"name", p.name},
                       {"shape", p.tensor.shape()},
                       {"offset", offset},
                       {"bytes", bytes}});
    offset += bytes;
  }
  json manifest{{"config", NetworkConfigToJson(ck.model.config())},
                {"trained_qf", ck.trained_qf},
                {"step", ck.step},
                {"validation_loss", ck.validation_loss ? json(*ck.validation_loss) : json()},
                {"init_digest", ck.init_digest},
                {"digest", HexDigest(ck.model.Digest())},
                {"dtype", "f32le"},
                {"tensors", tensors},
                {"payload_bytes", offset}};
  const std::string text = manifest.dump(1);
  std::string out = std::string(kCheckpointMagic) + " " +
                    std::to_string(kCheckpointVersion) + "\n" +
                    std::to_string(text.size()) + "\n" + text;
  out.reserve(out.size() + offset);
  for (const auto& p : ck.model.parameters()) {
    const auto data = p.tensor.data();
    out.append(reinterpret_cast<const char*>(data.data()), data.size_bytes());
  }
  return out;
}

Checkpoint ParseCheckpoint(std::string_view bytes, std::string_view source) {
  const std::string where(source);
  auto fail = [&](const std::string& what) -> CheckpointError {
    return CheckpointError("checkpoint '" + where + "': " + what);
  };
  const std::string magic = std::string(kCheckpointMagic) + " ";
  if (!bytes.starts_with(magic)) throw fail("bad magic");
  std::size_t eol = bytes.find('\n');
  if (eol == std::string_view::npos) throw fail("truncated header");
  if (bytes.substr(magic.size(), eol - magic.size()) !=
      std::to_string(kCheckpointVersion)) {
    throw fail("unsupported version '" +
               std::string(bytes.substr(magic.size(), eol - magic.size())) + "'");
  }
  const std::size_t len_start = eol + 1;
  const std::size_t len_end = bytes.find('\n', len_start);
  if (len_end == std::string_view::npos) throw fail("truncated header");
  std::size_t manifest_len = 0;
  try {
    manifest_len = std::stoull(std::string(bytes.substr(len_start, len_end - len_start)));
  } catch (const std::exception&) {
    throw fail("bad manifest length");
  }
  const std::size_t manifest_start = len_end + 1;
  if (bytes.size() < manifest_start + manifest_len) throw fail("truncated manifest");
  json m;
  try {
    m = json::parse(bytes.substr(manifest_start, manifest_len));
  } catch (const json::parse_error& e) {
    throw fail(std::string("manifest is not valid JSON: ") + e.what());
  }
  const std::string_view payload = bytes.substr(manifest_start + manifest_len);

  Checkpoint ck;
  NetworkConfig config;
  try {
    config = NetworkConfigFromJson(m.at("config"));
    config.Validate();
    if (m.at("dtype") != "f32le") throw fail("unsupported dtype " + m.at("dtype").dump());
    ck.trained_qf = m.at("trained_qf").get<int>();
    ck.step = m.at("step").get<std::int64_t>();
    if (!m.at("validation_loss").is_null()) {
      ck.validation_loss = m.at("validation_loss").get<double>();
    }
    ck.init_digest = m.at("init_digest").get<std::string>();
  } catch (const ConfigError& e) {
    throw fail(e.what());
  } catch (const json::exception& e) {
    throw fail(std::string("malformed manifest field: ") + e.what());
  }
  try {
    if (m.at("payload_bytes").get<std::size_t>() != payload.size()) {
      throw fail("payload is " + std::to_string(payload.size()) + " bytes, manifest says " +
                 m.at("payload_bytes").dump());
    }

    ck.model = Model<float>::Build(config, 0);
    const json& tensors = m.at("tensors");
    auto& params = ck.model.parameters();
    if (!tensors.is_array()) throw fail("field 'tensors' must be an array");
    for (std::size_t i = 0; i < std::max(params.size(), tensors.size()); ++i) {
      if (i >= tensors.size()) throw fail("missing tensor '" + params[i].name + "'");
      const std::string name = tensors[i].at("name").get<std::string>();
      if (i >= params.size() || params[i].name != name) {
        throw fail("unexpected tensor '" + name + "'");
      }
      const Shape shape = tensors[i].at("shape").get<Shape>();
      if (shape != params[i].tensor.shape()) {
        throw fail("tensor '" + name + "' has shape " + ShapeString(shape) +
                   ", architecture needs " + ShapeString(params[i].tensor.shape()));
      }
      const std::size_t off = tensors[i].at("offset").get<std::size_t>();
      const std::size_t n = params[i].tensor.numel() * sizeof(float);
      if (tensors[i].at("bytes").get<std::size_t>() != n || off + n > payload.size()) {
        throw fail("tensor '" + name + "' has an inconsistent byte range");
      }
      auto dst = params[i].tensor.mutable_data();
      std::memcpy(dst.data(), payload.data() + off, n);
      for (float v : dst) {
        if (!std::isfinite(v)) throw fail("tensor '" + name + "' holds non-finite values");
      }
    }
    if (HexDigest(ck.model.Digest()) != m.at("digest").get<std::string>()) {
      throw fail("parameter digest mismatch (corrupt payload)");
    }
    return ck;
  } catch (const json::exception& e) {
    throw fail(std::string("malformed manifest field: ") + e.what());
  }
}

void SaveCheckpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  WriteFileAtomically(path, SerializeCheckpoint(checkpoint));
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint '" + path.string() + "'");
  const std::string bytes{std::istreambuf_iterator<char>(in),
                          std::istreambuf_iterator<char>()};
  return ParseCheckpoint(bytes, path.string());
}

void RequireSameArchitecture(const NetworkConfig& expected, const NetworkConfig& actual) {
  if (auto field = FirstDifference(expected, actual)) {
    throw CheckpointError("checkpoint architecture differs in field '" + *field +
                          "': expected " + NetworkConfigToJson(expected).at(*field).dump() +
                          ", found " + NetworkConfigToJson(actual).at(*field).dump());
  }
}

}  // namespace dualres
