/*
 * Copyright 2026 The plugselect Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PLUGSELECT_ERROR_HPP_
#define PLUGSELECT_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace plugselect {

// Broad failure classes. The command-line tool maps these onto exit codes
// (validation 2, numerical 3, I/O 4).
enum class ErrorKind { kValidation, kNumerical, kIo };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Bad arguments, dimension mismatches, violated preconditions.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::kValidation, what) {}
};

// Divergence, non-finite values, unstable filter designs.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::kNumerical, what) {}
};

// Unreadable, unwritable, truncated or corrupt files.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

}  // namespace plugselect

#endif  // PLUGSELECT_ERROR_HPP_
