/**
 * Copyright 2026 The paada Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace paada {

/// Base of every error raised by the library. `exit_code()` is what the CLI
/// returns when the error escapes to main.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

/// Bad or inconsistent configuration (unknown key, out-of-range value,
/// unknown environment family, degenerate normalization bounds).
class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// Non-finite value encountered during evaluation or optimization.
class NumericError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

class IoError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

/// Vector/matrix dimensions that do not chain.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Operation called outside its contract (empty batch, step after done, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace paada
