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

#include "dualres/tensor.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "dualres/fileutil.h"

namespace dualres {

namespace fs = std::filesystem;

std::string ShapeString(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

namespace {

constexpr char kTensorMagic[4] = {'D', 'R', 'T', 'N'};

template <typename V>
void Put(std::string& out, V value) {
  static_assert(std::endian::native == std::endian::little,
                "dump writers assume a little-endian host");
  char bytes[sizeof(V)];
  std::memcpy(bytes, &value, sizeof(V));
  out.append(bytes, sizeof(V));
}

}  // namespace

template <typename T>
void WriteTensorDump(const Tensor<T>& t, const fs::path& path) {
  std::string out(kTensorMagic, 4);
  Put(out, static_cast<std::uint32_t>(sizeof(T)));
  Put(out, static_cast<std::uint32_t>(t.rank()));
  for (int d : t.shape()) Put(out, static_cast<std::int64_t>(d));
  const auto data = t.data();
  out.append(reinterpret_cast<const char*>(data.data()), data.size_bytes());
  WriteFileAtomically(path, out);
}

template <typename T>
Tensor<T> ReadTensorDump(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read tensor dump '" + path.string() + "'");
  std::string bytes{std::istreambuf_iterator<char>(in),
                    std::istreambuf_iterator<char>()};
  std::size_t pos = 0;
  auto take = [&](void* dst, std::size_t n) {
    if (pos + n > bytes.size()) {
      throw IoError("truncated tensor dump '" + path.string() + "'");
    }
    std::memcpy(dst, bytes.data() + pos, n);
    pos += n;
  };
  char magic[4];
  take(magic, 4);
  if (std::memcmp(magic, kTensorMagic, 4) != 0) {
    throw IoError("'" + path.string() + "' is not a tensor dump");
  }
  std::uint32_t elem = 0, rank = 0;
  take(&elem, 4);
  take(&rank, 4);
  if (elem != sizeof(T)) {
    throw IoError("tensor dump '" + path.string() + "' has element size " +
                  std::to_string(elem) + ", expected " +
                  std::to_string(sizeof(T)));
  }
  if (rank > 8) throw IoError("tensor dump rank too large");
  Shape shape(rank);
  for (auto& d : shape) {
    std::int64_t v = 0;
    take(&v, 8);
    if (v < 0 || v > (1 << 30)) throw IoError("bad tensor dump dimension");
    d = static_cast<int>(v);
  }
  std::vector<T> data(NumElements(shape));
  take(data.data(), data.size() * sizeof(T));
  if (pos != bytes.size()) {
    throw IoError("trailing bytes in tensor dump '" + path.string() + "'");
  }
  return Tensor<T>(std::move(shape), std::move(data));
}

template void WriteTensorDump(const Tensor<float>&, const fs::path&);
template void WriteTensorDump(const Tensor<double>&, const fs::path&);
template Tensor<float> ReadTensorDump(const fs::path&);
template Tensor<double> ReadTensorDump(const fs::path&);

}  // namespace dualres
