// ctcdec/matrix.hpp

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

#ifndef CTCDEC_MATRIX_HPP_
#define CTCDEC_MATRIX_HPP_

#include <cmath>
#include <cstddef>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctcdec/errors.hpp"
#include "ctcdec/numeric.hpp"

namespace ctcdec {

/// Dense row-major T x C matrix of doubles. One frame per row.
///
/// Serves both roles the pipeline needs: acoustic feature sequences
/// (C = feature dim) and log-posterior / score matrices (C = vocabulary
/// size). Immutable use after construction is the concurrency contract;
/// nothing here locks.
class Matrix {
 public:
  /// Seconds per frame, when known. Metadata only: carried for posterior
  /// matrices, not serialized in the LPM container, ignored by
  /// bit_identical().
  std::optional<double> frame_duration;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// T x D acoustic features. Finite entries; T >= 1, D >= 1 where consumed.
using FeatureSequence = Matrix;

/// T x N per-frame log-probabilities over the token vocabulary. Rows are
/// normalized distributions in the log domain (|logsumexp| <= 1e-4,
/// entries <= 1e-6); -inf is a legal hard zero.
using LogPosteriorMatrix = Matrix;

/// True iff the two matrices have equal shape and bitwise-equal payloads
/// (distinguishes -0.0 from 0.0; NaN compares equal to itself).
inline bool bit_identical(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) return false;
  return a.data().empty() ||
         std::memcmp(a.data().data(), b.data().data(),
                     a.data().size() * sizeof(double)) == 0;
}

/// Validates the LogPosteriorMatrix invariants; throws FormatError naming
/// the first offense. `context` prefixes the message (e.g. a file name).
inline void check_log_posteriors(const Matrix& m, const std::string& context,
                                 double row_tol = 1e-4,
                                 double entry_tol = 1e-6) {
  if (m.rows() < 1 || m.cols() < 1) {
    throw FormatError(context + ": empty log-posterior matrix");
  }
  for (std::size_t t = 0; t < m.rows(); ++t) {
    for (std::size_t n = 0; n < m.cols(); ++n) {
      double v = m.at(t, n);
      if (!(v <= entry_tol)) {
        throw FormatError(context + ": entry (" + std::to_string(t) + ", " +
                          std::to_string(n) + ") = " + std::to_string(v) +
                          " is not a log-probability");
      }
    }
    double lse = log_sum_exp(m.row(t));
    if (!(std::fabs(lse) <= row_tol)) {
      throw FormatError(context + ": row " + std::to_string(t) +
                        " is not a normalized log distribution (logsumexp = " +
                        std::to_string(lse) + ")");
    }
  }
}

}  // namespace ctcdec

#endif  // CTCDEC_MATRIX_HPP_
