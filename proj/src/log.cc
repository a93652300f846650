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

#include "dualres/log.h"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace dualres {

namespace {

std::atomic<int>& LevelSlot() {
  static std::atomic<int> level = [] {
    LogLevel parsed = LogLevel::kInfo;
    if (const char* env = std::getenv("DUALRES_LOG")) ParseLogLevel(env, &parsed);
    return static_cast<int>(parsed);
  }();
  return level;
}

constexpr const char* kNames[] = {"error", "warn", "info", "debug"};

}  // namespace

bool ParseLogLevel(std::string_view text, LogLevel* level) {
  for (int i = 0; i < 4; ++i) {
    if (text == kNames[i]) {
      *level = static_cast<LogLevel>(i);
      return true;
    }
  }
  return false;
}

LogLevel CurrentLogLevel() { return static_cast<LogLevel>(LevelSlot().load()); }

void SetLogLevel(LogLevel level) { LevelSlot().store(static_cast<int>(level)); }

void Log(LogLevel level, std::string_view message) {
  if (static_cast<int>(level) > LevelSlot().load()) return;
  static std::mutex mu;
  std::lock_guard lock(mu);
  std::cerr << "[" << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace dualres
