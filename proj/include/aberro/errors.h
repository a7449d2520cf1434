/* Copyright 2026 The Aberro Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef ABERRO_ERRORS_H_
#define ABERRO_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aberro {

// Argument violations use std::invalid_argument. The types below cover the
// remaining failure classes so callers (and the CLI) can tell them apart.

// Input is well-formed but numerically degenerate (all-zero pupil, kernel
// wider than the image, ...).
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A metric has no defined value for the given population.
class UndefinedMetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Requested spatial frequency lies beyond the optical cutoff.
class OutOfBandError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FitFailureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file contents. `offset` is the byte position where parsing
// stopped.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace aberro

#endif  // ABERRO_ERRORS_H_
