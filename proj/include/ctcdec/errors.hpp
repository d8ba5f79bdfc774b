// ctcdec/errors.hpp

// Copyright 2026   ctcdec authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef CTCDEC_ERRORS_HPP_
#define CTCDEC_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ctcdec {

/// A caller violated an operation's precondition.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A file or stream does not conform to its declared format.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Text-format parse failure, carrying the 1-based offending line.
class ParseError : public FormatError {
 public:
  ParseError(const std::string& message, std::size_t line)
      : FormatError(message + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// An acoustic scorer failed; batch_index identifies the failing input
/// when the failure is attributable to one.
class ScoringError : public std::runtime_error {
 public:
  static constexpr std::size_t kNoIndex = static_cast<std::size_t>(-1);

  explicit ScoringError(const std::string& message,
                        std::size_t batch_index = kNoIndex)
      : std::runtime_error(batch_index == kNoIndex
                               ? message
                               : message + " (batch index " +
                                     std::to_string(batch_index) + ")"),
        batch_index_(batch_index) {}
  std::size_t batch_index() const { return batch_index_; }

 private:
  std::size_t batch_index_;
};

/// Inconsistent run configuration (e.g. LM/vocabulary mismatch).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ctcdec

#endif  // CTCDEC_ERRORS_HPP_
