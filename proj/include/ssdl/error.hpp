// Copyright 2026 The SSDL Authors
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

#ifndef SSDL_ERROR_HPP
#define SSDL_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ssdl {

/// Failure categories. The numeric values double as CLI exit codes.
enum class ErrorKind : int {
  input = 2,      ///< unreadable, malformed or inconsistent inputs
  numerical = 3,  ///< singular systems, non-finite values, degenerate geometry
  invariant = 4,  ///< an internal invariant did not hold
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

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorKind::input, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::numerical, what) {}
};

class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string& what)
      : Error(ErrorKind::invariant, what) {}
};

const char* kind_name(ErrorKind kind) noexcept;

}  // namespace ssdl

#endif  // SSDL_ERROR_HPP
