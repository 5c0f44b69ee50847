// Copyright 2026 The Endotool Authors
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

namespace endotool {

/// Base class for every error raised by the toolkit. The CLI maps the
/// subclasses onto its exit-code contract (2 = configuration/contract
/// violation, 3 = evaluation coverage mismatch).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (bad header, wrong field count, stray CR).
class FormatError : public Error {
 public:
  using Error::Error;
};

// A field parsed but its value violates the contract (non-binary tool bit,
// out-of-range label, NaN score).
class ValueError : public Error {
 public:
  using Error::Error;
};

// Frame indices not strictly increasing within a video.
class OrderingError : public Error {
 public:
  using Error::Error;
};

// Inconsistent or invalid configuration (duplicate video ids, overlapping
// splits, negative loss weights, variant mismatches).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A phase entry that matches no tool-annotated frame.
class JoinError : public Error {
 public:
  using Error::Error;
};

// Reference to an unknown video id.
class LookupError : public Error {
 public:
  using Error::Error;
};

// Operation requires a non-empty input.
class EmptyInputError : public Error {
 public:
  using Error::Error;
};

// Metric is mathematically undefined (no positive labels).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

// Predictions and ground truth do not cover the same frames.
class CoverageError : public Error {
 public:
  using Error::Error;
};

// Weights file rejected (shape or name mismatches, bad magic).
class LoadError : public Error {
 public:
  using Error::Error;
};

// Tensor shape disagrees with the expected shape.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Wrong number of values where a fixed arity is required.
class ArityError : public Error {
 public:
  using Error::Error;
};

// Filesystem failure (unreadable/unwritable path, bad PNG).
class IoError : public Error {
 public:
  using Error::Error;
};

// Training aborted (non-finite loss); message carries iteration and lr state.
class TrainingAbort : public Error {
 public:
  using Error::Error;
};

}  // namespace endotool
