// Copyright 2026 The pdcloop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace pdcloop {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration / serialized input.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// A numerical threshold (truncation leakage) was exceeded.
class TruncationError : public Error {
  public:
    TruncationError(const std::string &what, double leakage, double threshold)
        : Error(what), leakage_(leakage), threshold_(threshold) {}
    double leakage() const { return leakage_; }
    double threshold() const { return threshold_; }

  private:
    double leakage_;
    double threshold_;
};

/// Mode label lookup failures and shape mismatches.
class DimensionError : public Error {
  public:
    using Error::Error;
};

/// Post-selection retained no weight.
class PostselectionError : public Error {
  public:
    using Error::Error;
};

}  // namespace pdcloop
