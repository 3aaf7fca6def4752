// Copyright 2026 The shapefit Authors. All Rights Reserved.
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

#ifndef SHAPEFIT_ERROR_HPP
#define SHAPEFIT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace shapefit {

/// Coarse error category; the CLI maps it to its exit code.
enum class ErrorKind {
  usage = 1,    ///< bad flags, invalid configuration or parameter vectors
  data = 2,     ///< missing/malformed files, dimension mismatches
  numeric = 3,  ///< alignment or training failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::usage, w) {}
};

struct ParameterError : Error {
  explicit ParameterError(const std::string& w) : Error(ErrorKind::usage, w) {}
};

struct InvalidPoseError : Error {
  explicit InvalidPoseError(const std::string& w) : Error(ErrorKind::usage, w) {}
};

struct DataError : Error {
  explicit DataError(const std::string& w) : Error(ErrorKind::data, w) {}
};

struct BoundsError : Error {
  explicit BoundsError(const std::string& w) : Error(ErrorKind::data, w) {}
};

struct AlignmentError : Error {
  explicit AlignmentError(const std::string& w) : Error(ErrorKind::numeric, w) {}
};

struct TrainingError : Error {
  explicit TrainingError(const std::string& w) : Error(ErrorKind::numeric, w) {}
};

}  // namespace shapefit

#endif  // SHAPEFIT_ERROR_HPP
