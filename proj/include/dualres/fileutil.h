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

#ifndef DUALRES_FILEUTIL_H_
#define DUALRES_FILEUTIL_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>

namespace dualres {

// Runs write(tmp) against a temporary sibling of path, then renames it over
// path. On any exception the temporary is removed and path is untouched.
void AtomicWrite(const std::filesystem::path& path,
                 const std::function<void(const std::filesystem::path&)>& write);

void WriteFileAtomically(const std::filesystem::path& path,
                         std::string_view contents);

// 64-bit FNV-1a over raw bytes; used for parameter and checkpoint digests.
std::uint64_t Fnv1a64(std::span<const std::byte> bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string HexDigest(std::uint64_t digest);

}  // namespace dualres

#endif  // DUALRES_FILEUTIL_H_
