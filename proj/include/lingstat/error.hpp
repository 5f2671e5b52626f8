// Copyright 2026 The lingstat Authors.
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

#pragma once

#include <stdexcept>
#include <string>

namespace lingstat {

// Bad caller input: out-of-range parameters, mismatched dimensions,
// unknown names.
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// File could not be read or written.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input bytes are not what the reader expects (bad UTF-8, bad model file).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A regression or estimator had too little data to produce a number.
struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Run configuration is malformed or violates an invariant.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training diverged (non-finite loss).
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lingstat
