// Copyright 2026 The SSV Authors.
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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ssv {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or vector dimensions do not conform.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Input is valid in shape but numerically degenerate (zero vector, empty set).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// A NaN or Inf appeared in a loss or gradient.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

// A documented precondition was violated by the caller.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// A file could not be opened, read or written.
class IoError : public Error {
 public:
  IoError(const std::string& message, std::string path)
      : Error(message + ": " + path), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Malformed file content. `offset` is a byte offset or a 1-based line number,
// depending on the format.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t offset)
      : Error(message + " (at " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace ssv
