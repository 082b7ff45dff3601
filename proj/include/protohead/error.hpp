/* Copyright 2026 The protohead Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#pragma once

#include <stdexcept>
#include <string>

namespace protohead {

// Root of every error the library throws. The CLI maps subclasses onto exit
// statuses, so new failure kinds should derive from the closest match.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed on-disk data: bad magic, unknown version, truncated payload.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a domain invariant (label range, counts).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Filesystem failure. Carries the offending path.
class IoError : public Error {
 public:
  IoError(std::string path, const std::string& cause)
      : Error(path + ": " + cause), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration key or value. Maps to the usage exit status.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite value produced by a computation (gradient, loss, objective).
class NumericError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public NumericError {
 public:
  DivergenceError(int epoch, int batch, const std::string& what)
      : NumericError("diverged at epoch " + std::to_string(epoch) + ", batch " +
                     std::to_string(batch) + ": " + what),
        epoch_(epoch),
        batch_(batch) {}
  int epoch() const noexcept { return epoch_; }
  int batch() const noexcept { return batch_; }

 private:
  int epoch_;
  int batch_;
};

}  // namespace protohead
