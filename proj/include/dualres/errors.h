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

#ifndef DUALRES_ERRORS_H_
#define DUALRES_ERRORS_H_

#include <stdexcept>
#include <string>

namespace dualres {

// Every error raised by the library derives from Error. The CLI maps the
// families below onto its exit codes (usage 1, data 2, numeric fault 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed a value outside an operation's precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// A file exists but could not be parsed as a supported image.
class DecodeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Inconsistent configuration, empty corpus, architecture mismatch.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

// Non-finite value produced by a forward operator, or an analytic/empirical
// disagreement that indicates a numeric bug.
class NumericFault : public Error {
 public:
  using Error::Error;
};

// API misuse such as running backward twice on one tape.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace dualres

#endif  // DUALRES_ERRORS_H_
