// Copyright 2026 The lgadecode Authors
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

namespace lga {

// Root of all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Stream or filesystem failure.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed input bytes or text (LGA1 container, ARPA file, JSON).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Values that parse but violate a type invariant (shapes, NaN, row sums).
class InvariantError : public Error {
 public:
  using Error::Error;
};

// Caller-supplied parameter outside its domain.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

}  // namespace lga
