// Copyright 2026 The DSCL Authors. All Rights Reserved.
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

namespace dscl {

// Base of every error raised by the library. Callers that only care about
// "did it work" catch this; the CLI maps the subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand extents are incompatible.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A zero-norm or zero-variance vector reached an operation that divides by it.
class DegenerateVectorError : public Error {
 public:
  using Error::Error;
};

// A caller violated an operation's precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Invalid user configuration (unknown key, out-of-range value, G > V, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed file. `offset()` is the byte position where parsing gave up.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// NaN/Inf produced during training or by a public op.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Scene placement could not be satisfied within the retry budget.
class GenerationError : public Error {
 public:
  using Error::Error;
};

}  // namespace dscl
