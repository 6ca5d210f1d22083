/* Copyright 2026 The oodseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <stdexcept>
#include <string>

namespace oodseg {

// Base class for every error raised by the library. The CLI maps the
// concrete subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file header, wrong magic, unsupported version or maxval.
class FormatError : public Error {
 public:
  using Error::Error;
};

// File ended before the declared payload was read.
class TruncationError : public FormatError {
 public:
  using FormatError::FormatError;
};

// Payload is well-formed but carries invalid values (NaN, inf).
class DataError : public Error {
 public:
  using Error::Error;
};

// Label code outside {0..C-1} and not a sentinel.
class InvalidClassError : public DataError {
 public:
  using DataError::DataError;
};

// Caller passed inconsistent shapes, out-of-range parameters, etc.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Filesystem failure (unwritable directory, missing file).
class IoError : public Error {
 public:
  using Error::Error;
};

// Operation invoked in the wrong state (stale forward cache, missing checkpoint).
class StateError : public Error {
 public:
  using Error::Error;
};

// Ranking metric requested on data with a single class.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace oodseg
