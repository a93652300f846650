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

// Stderr logging with a verbosity taken from the DUALRES_LOG environment
// variable (error, warn, info, debug; default info).

#ifndef DUALRES_LOG_H_
#define DUALRES_LOG_H_

#include <string_view>

namespace dualres {

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

// Reads DUALRES_LOG once. Unknown values fall back to info.
LogLevel CurrentLogLevel();
void SetLogLevel(LogLevel level);
bool ParseLogLevel(std::string_view text, LogLevel* level);

// One line on stderr, prefixed with the level name.
void Log(LogLevel level, std::string_view message);

inline void LogWarn(std::string_view message) { Log(LogLevel::kWarn, message); }
inline void LogInfo(std::string_view message) { Log(LogLevel::kInfo, message); }
inline void LogDebug(std::string_view message) { Log(LogLevel::kDebug, message); }

}  // namespace dualres

#endif  // DUALRES_LOG_H_
