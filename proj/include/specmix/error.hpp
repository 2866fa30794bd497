// Copyright 2026 The specmix Authors. All Rights Reserved.
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
// =============================================================================

#ifndef SPECMIX_ERROR_HPP
#define SPECMIX_ERROR_HPP

#include <stdexcept>
#include <string>

namespace specmix {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: unreadable files, malformed rows, out-of-range arguments.
/// The CLI maps these to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Model or numerical failure (factorization, estimation, sampling).
/// The CLI maps these to exit code 1.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace specmix

#endif  // SPECMIX_ERROR_HPP
