// Copyright 2026 The senssum Authors.
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
#include <vector>

namespace senssum {

// Precondition violated by caller-supplied values.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent data read from a file.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A load error tied to a 1-based line number.
class LoadError : public DataError {
 public:
  LoadError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Transport-level failure that survived the retry policy.
class BackendError : public std::runtime_error {
 public:
  BackendError(const std::string& what, std::vector<std::string> failed_ids = {})
      : std::runtime_error(what), failed_ids_(std::move(failed_ids)) {}
  const std::vector<std::string>& failed_ids() const noexcept { return failed_ids_; }

 private:
  std::vector<std::string> failed_ids_;
};

}  // namespace senssum
