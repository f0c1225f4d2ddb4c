/*
 * Copyright 2026 the recfair authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
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

namespace recfair {

// Base for all library failures.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent input data. Carries file/line context when the
// problem is tied to a specific record.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(what) {}

  DataError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what) {}
};

// Invalid configuration: unknown keys, bad grids, out-of-range options.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}

  ConfigError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what) {}
};

// Model failures at fit or score time (e.g. divergence to non-finite values).
class ModelError : public Error {
 public:
  explicit ModelError(const std::string& what) : Error(what) {}
};

}  // namespace recfair
