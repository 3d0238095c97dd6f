/*
 * Copyright 2026 The Disent Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
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

namespace disent {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition (shape mismatch, non-scalar loss).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Invalid configuration: label space, variant flags, experiment file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// The data cannot support the requested operation (no sampleable tag, empty split).
class DatasetError : public Error {
 public:
  using Error::Error;
};

// Malformed dataset or model file.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Cosine similarity requested on a zero vector.
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class DivergedError : public Error {
 public:
  DivergedError(const std::string& what, int epoch) : Error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

}  // namespace disent
