// Copyright 2026 The xaiseg Authors. All Rights Reserved.
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

#ifndef XAISEG_ERROR_HPP_
#define XAISEG_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xaiseg {

// Broad failure classes. The CLI maps these onto its exit codes.
enum class ErrorCategory { kUsage, kData, kInvariant };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

// Invalid configuration value (bad flag, out-of-range parameter).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorCategory::kUsage, what) {}
};

// Input data that cannot be processed: wrong shapes, bad labels, I/O.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what)
      : Error(ErrorCategory::kData, what) {}
};

class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

// Malformed raster or checkpoint file. Carries the byte offset at which
// parsing failed.
class FormatError : public DataError {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : DataError(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Input has no valid answer (constant map for Otsu, empty partition side).
class DegenerateError : public DataError {
 public:
  using DataError::DataError;
};

// Problem size exceeds a configured dense-computation budget.
class BudgetError : public DataError {
 public:
  using DataError::DataError;
};

// Internal consistency check failed; indicates a bug rather than bad input.
class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string& what)
      : Error(ErrorCategory::kInvariant, what) {}
};

}  // namespace xaiseg

#endif  // XAISEG_ERROR_HPP_
