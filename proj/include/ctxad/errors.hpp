/*
 * Copyright 2026 The ctxad Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CTXAD_ERRORS_HPP_
#define CTXAD_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace ctxad {

// Every failure the library reports derives from Error. The CLI maps each
// kind onto a stable process exit code (see ExitCode below).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};
class ParameterError : public Error {
 public:
  using Error::Error;
};
class SchemaError : public Error {
 public:
  using Error::Error;
};
class DataError : public Error {
 public:
  using Error::Error;
};
class AlignmentError : public Error {
 public:
  using Error::Error;
};
class DimensionError : public Error {
 public:
  using Error::Error;
};
class CalibrationError : public Error {
 public:
  using Error::Error;
};
class RangeError : public Error {
 public:
  using Error::Error;
};
class JoinError : public Error {
 public:
  using Error::Error;
};
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

enum class ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kConfig = 2,
  kCalibration = 3,
  kSchema = 4,
  kJoin = 5,
};

}  // namespace ctxad

#endif  // CTXAD_ERRORS_HPP_
