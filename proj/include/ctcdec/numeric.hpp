// ctcdec/numeric.hpp

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

#ifndef CTCDEC_NUMERIC_HPP_
#define CTCDEC_NUMERIC_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "ctcdec/errors.hpp"

namespace ctcdec {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)). Negative infinity is the absorbing zero.
inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double hi = std::max(a, b);
  double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

inline double log_add(double a, double b, double c) {
  return log_add(log_add(a, b), c);
}

/// log Σ exp(v_i), max-shifted for stability. Entries may be -inf;
/// returns -inf iff every entry is -inf. Empty input is a usage error.
inline double log_sum_exp(std::span<const double> values) {
  if (values.empty()) {
    throw UsageError("log_sum_exp: empty input");
  }
  double hi = *std::max_element(values.begin(), values.end());
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double v : values) {
    acc += std::exp(v - hi);
  }
  return hi + std::log(acc);
}

/// In-place log-softmax: row[i] -= logsumexp(row). -inf entries stay -inf.
/// A row that is entirely -inf is left unchanged (it carries no mass to
/// normalize).
inline void log_softmax_inplace(std::span<double> row) {
  if (row.empty()) {
    throw UsageError("log_softmax: empty input");
  }
  double lse = log_sum_exp(row);
  if (lse == kNegInf) return;
  for (double& v : row) {
    if (v != kNegInf) v -= lse;
  }
}

inline std::vector<double> log_softmax(std::span<const double> row) {
  std::vector<double> out(row.begin(), row.end());
  log_softmax_inplace(out);
  return out;
}

}  // namespace ctcdec

#endif  // CTCDEC_NUMERIC_HPP_
