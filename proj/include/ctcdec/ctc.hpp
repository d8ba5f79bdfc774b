// ctcdec/ctc.hpp

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

#ifndef CTCDEC_CTC_HPP_
#define CTCDEC_CTC_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ctcdec/errors.hpp"

namespace ctcdec {

/// Standard CTC alignment-to-label map: drop consecutive duplicates, then
/// drop blanks. Indices must lie in [0, vocab_size).
inline std::vector<std::int32_t> collapse_ctc(
    std::span<const std::int32_t> path, std::int32_t blank_index,
    std::int32_t vocab_size) {
  std::vector<std::int32_t> out;
  std::int32_t prev = -1;
  for (std::int32_t id : path) {
    if (id < 0 || id >= vocab_size) {
      throw UsageError("collapse_ctc: token index " + std::to_string(id) +
                       " out of range [0, " + std::to_string(vocab_size) + ")");
    }
    if (id != prev && id != blank_index) {
      out.push_back(id);
    }
    prev = id;
  }
  return out;
}

/// A decoded, blank-free token sequence with its decomposed score terms.
/// Under a configuration (lambda_ilm, lambda_lm, insertion bonus):
///
///   total_score = acoustic_score - lambda_ilm * ilm_score
///               + lambda_lm * lm_score + bonus * tokens.size()
///
/// acoustic_score is the log path-sum over the score matrix the decoder
/// searched; when that matrix was ILM-adjusted the ILM term is already
/// folded in and ilm_score stays 0 (per-prefix ILM terms are not defined
/// once paths merge). lm_score is the unweighted external-LM log-prob
/// including end-of-sentence.
struct Hypothesis {
  std::vector<std::int32_t> tokens;
  double acoustic_score = 0.0;
  double ilm_score = 0.0;
  double lm_score = 0.0;
  double total_score = 0.0;
};

}  // namespace ctcdec

#endif  // CTCDEC_CTC_HPP_
