// ctcdec/ilme.hpp

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

#ifndef CTCDEC_ILME_HPP_
#define CTCDEC_ILME_HPP_

// Masking-based internal-LM estimation for CTC log-posteriors.
//
// The model's internal LM is its bias absent acoustic evidence. We surface
// it by re-scoring masked variants of the input: per mask k and frame t,
// a delta between masked and original posteriors says whether that frame
// reacted to the masking. Frames that reacted (normalized delta above
// gamma) contribute their masked log-posterior rows to a per-frame sum,
// which log-softmax turns into the ILM pseudo log-likelihood. Subtracting
// lambda_ilm times that row from the original posteriors — skipping frames
// where blank already dominates (posterior >= beta) — yields the adjusted
// scores handed to beam search.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ctcdec/acoustic.hpp"
#include "ctcdec/errors.hpp"
#include "ctcdec/masking.hpp"
#include "ctcdec/matrix.hpp"

namespace ctcdec {

struct IlmConfig {
  double gamma = 0.25;       // normalized-delta threshold, in [0, 1]
  double beta = 0.9;         // blank-posterior gate, in [0, 1]
  double lambda_ilm = 0.1;   // ILM subtraction weight, >= 0
  bool batched_scoring = true;  // one K+1 batch vs. sequential single calls

  void validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
      throw UsageError("gamma must lie in [0, 1]");
    }
    if (!(beta >= 0.0 && beta <= 1.0)) {
      throw UsageError("beta must lie in [0, 1]");
    }
    if (!(lambda_ilm >= 0.0)) {
      throw UsageError("lambda_ilm must be >= 0");
    }
  }
};

/// Per-frame ILM pseudo log-likelihood. Rows are normalized log
/// distributions where applied is true; where no mask contributed
/// (contributing_mask_counts == 0) the row is NaN-filled and must not be
/// read.
struct IlmEstimate {
  Matrix rows;
  std::vector<std::int32_t> contributing_mask_counts;
  std::vector<bool> applied;
};

/// Per-frame max over the vocabulary of |masked - original| log-posteriors.
/// Entries where both sides are the same hard zero count as no difference.
inline std::vector<double> posterior_deltas(const LogPosteriorMatrix& original,
                                            const LogPosteriorMatrix& masked) {
  if (!original.same_shape(masked)) {
    throw UsageError("posterior_deltas: shape mismatch");
  }
  std::vector<double> deltas(original.rows(), 0.0);
  for (std::size_t t = 0; t < original.rows(); ++t) {
    double best = 0.0;
    std::span<const double> a = original.row(t);
    std::span<const double> b = masked.row(t);
    for (std::size_t n = 0; n < original.cols(); ++n) {
      double eps = (a[n] == b[n]) ? 0.0 : std::fabs(b[n] - a[n]);
      if (eps > best) best = eps;
    }
    deltas[t] = best;
  }
  return deltas;
}

/// Normalizes a mask's deltas across frames to [0, 1] by dividing by their
/// maximum. An all-zero input (masked scoring identical to the original)
/// stays all-zero: that mask carries no signal and will contribute nowhere.
inline std::vector<double> normalize_deltas(std::span<const double> deltas) {
  if (deltas.empty()) {
    throw UsageError("normalize_deltas: empty input");
  }
  double hi = 0.0;
  for (double d : deltas) {
    if (d > hi) hi = d;
  }
  std::vector<double> out(deltas.size(), 0.0);
  if (hi == 0.0) return out;
  if (std::isinf(hi)) {
    for (std::size_t t = 0; t < deltas.size(); ++t) {
      out[t] = std::isinf(deltas[t]) ? 1.0 : 0.0;
    }
    return out;
  }
  for (std::size_t t = 0; t < deltas.size(); ++t) {
    out[t] = deltas[t] / hi;
  }
  return out;
}

namespace detail {

inline void check_ilm_shapes(const LogPosteriorMatrix& original,
                             const std::vector<LogPosteriorMatrix>& masked_set,
                             const MaskPlan& plan) {
  if (masked_set.size() != plan.mask_count()) {
    throw UsageError("estimate_ilm: got " + std::to_string(masked_set.size()) +
                     " masked matrices for a plan with K = " +
                     std::to_string(plan.mask_count()));
  }
  if (original.rows() != plan.frame_count) {
    throw UsageError("estimate_ilm: plan covers " +
                     std::to_string(plan.frame_count) +
                     " frames but posteriors have " +
                     std::to_string(original.rows()));
  }
  for (const LogPosteriorMatrix& m : masked_set) {
    if (!m.same_shape(original)) {
      throw UsageError("estimate_ilm: masked matrix shape mismatch");
    }
  }
}

}  // namespace detail

/// The thresholded pseudo log-likelihood: per frame, sums the masked
/// log-posterior rows of exactly the masks whose normalized delta strictly
/// exceeds gamma, then log-softmaxes the sum. `delta_hat_out`, when given,
/// receives the K per-mask normalized delta vectors.
inline IlmEstimate estimate_ilm(
    const LogPosteriorMatrix& original,
    const std::vector<LogPosteriorMatrix>& masked_set, const MaskPlan& plan,
    const IlmConfig& config,
    std::vector<std::vector<double>>* delta_hat_out = nullptr) {
  config.validate();
  detail::check_ilm_shapes(original, masked_set, plan);
  std::size_t frames = original.rows();
  std::size_t vocab = original.cols();

  std::vector<std::vector<double>> delta_hat(masked_set.size());
  for (std::size_t k = 0; k < masked_set.size(); ++k) {
    delta_hat[k] = normalize_deltas(posterior_deltas(original, masked_set[k]));
  }

  IlmEstimate est;
  est.rows = Matrix(frames, vocab, std::numeric_limits<double>::quiet_NaN());
  est.contributing_mask_counts.assign(frames, 0);
  est.applied.assign(frames, false);

  std::vector<double> sum(vocab);
  for (std::size_t t = 0; t < frames; ++t) {
    std::int32_t count = 0;
    std::fill(sum.begin(), sum.end(), 0.0);
    for (std::size_t k = 0; k < masked_set.size(); ++k) {
      if (!(delta_hat[k][t] > config.gamma)) continue;  // strict inequality
      ++count;
      std::span<const double> row = masked_set[k].row(t);
      for (std::size_t n = 0; n < vocab; ++n) sum[n] += row[n];
    }
    est.contributing_mask_counts[t] = count;
    if (count == 0) continue;
    est.applied[t] = true;
    log_softmax_inplace(sum);
    std::span<double> dst = est.rows.row(t);
    for (std::size_t n = 0; n < vocab; ++n) dst[n] = sum[n];
  }

  if (delta_hat_out != nullptr) {
    *delta_hat_out = std::move(delta_hat);
  }
  return est;
}

/// The gated subtraction: where the original blank posterior is below beta
/// and an ILM row exists, output = original - lambda_ilm * ilm_row over all
/// N entries (blank included); everywhere else the original row is copied
/// bit-identically. Output rows are scores, not distributions — no
/// renormalization.
inline Matrix adjust_scores(const LogPosteriorMatrix& original,
                            const IlmEstimate& ilm, const IlmConfig& config,
                            std::int32_t blank_index) {
  config.validate();
  if (!original.same_shape(ilm.rows) ||
      ilm.applied.size() != original.rows()) {
    throw UsageError("adjust_scores: shape mismatch");
  }
  if (blank_index < 0 ||
      static_cast<std::size_t>(blank_index) >= original.cols()) {
    throw UsageError("adjust_scores: blank index out of range");
  }
  if (config.lambda_ilm == 0.0) {
    return original;  // exact passthrough, no arithmetic
  }
  Matrix out = original;
  for (std::size_t t = 0; t < original.rows(); ++t) {
    if (!ilm.applied[t]) continue;
    if (!(std::exp(original.at(t, blank_index)) < config.beta)) continue;
    std::span<double> dst = out.row(t);
    std::span<const double> row = ilm.rows.row(t);
    for (std::size_t n = 0; n < original.cols(); ++n) {
      dst[n] -= config.lambda_ilm * row[n];
    }
  }
  return out;
}

/// Observability for the thresholds: everything the gates looked at.
struct IlmeDiagnostics {
  std::vector<std::vector<double>> delta_hat;   // [K][T] normalized deltas
  std::vector<double> blank_posterior;          // per frame, exp of blank entry
  std::vector<std::int32_t> contributing;       // per frame mask count
  std::vector<bool> adjusted;                   // subtraction fired at frame
};

struct IlmeResult {
  LogPosteriorMatrix original;  // posteriors of the unmasked input
  Matrix adjusted;              // scores handed to the decoder
  IlmEstimate estimate;
  IlmeDiagnostics diagnostics;
};

/// Core combination step over already-scored matrices (original first-class
/// for file-backed corpora where masked posteriors were computed elsewhere).
inline IlmeResult run_ilme_precomputed(
    LogPosteriorMatrix original, std::vector<LogPosteriorMatrix> masked_set,
    const MaskPlan& plan, const IlmConfig& config, std::int32_t blank_index) {
  IlmeResult result;
  result.estimate = estimate_ilm(original, masked_set, plan, config,
                                 &result.diagnostics.delta_hat);
  result.adjusted = adjust_scores(original, result.estimate, config,
                                  blank_index);
  std::size_t frames = original.rows();
  result.diagnostics.blank_posterior.resize(frames);
  result.diagnostics.contributing = result.estimate.contributing_mask_counts;
  result.diagnostics.adjusted.assign(frames, false);
  for (std::size_t t = 0; t < frames; ++t) {
    double p_blank = std::exp(original.at(t, blank_index));
    result.diagnostics.blank_posterior[t] = p_blank;
    result.diagnostics.adjusted[t] = config.lambda_ilm > 0.0 &&
                                     result.estimate.applied[t] &&
                                     p_blank < config.beta;
  }
  result.original = std::move(original);
  return result;
}

/// End-to-end estimation for one utterance: build the K masked variants,
/// score original + masks (one batch of K+1 by default, sequentially when
/// config.batched_scoring is off), then estimate and adjust.
inline IlmeResult run_ilme(const FeatureSequence& features,
                           const AcousticScorer& scorer, const MaskPlan& plan,
                           const IlmConfig& config, std::int32_t blank_index,
                           std::string_view utterance_id = "") {
  config.validate();
  if (plan.frame_count != features.rows()) {
    throw UsageError("run_ilme: plan covers " +
                     std::to_string(plan.frame_count) +
                     " frames but input has " +
                     std::to_string(features.rows()));
  }
  std::size_t masks = plan.mask_count();
  std::vector<ScoreTask> tasks;
  tasks.reserve(masks + 1);
  tasks.push_back({std::string(utterance_id), kOriginalMask, features});
  for (std::size_t k = 0; k < masks; ++k) {
    tasks.push_back({std::string(utterance_id), static_cast<std::int32_t>(k),
                     apply_mask(features, plan, k)});
  }

  std::vector<LogPosteriorMatrix> scored;
  if (config.batched_scoring) {
    scored = scorer.score_batch(tasks);
  } else {
    scored.reserve(tasks.size());
    for (const ScoreTask& task : tasks) {
      scored.push_back(scorer.score_batch({&task, 1}).front());
    }
  }
  if (scored.size() != tasks.size()) {
    throw ScoringError("scorer returned " + std::to_string(scored.size()) +
                       " matrices for a batch of " +
                       std::to_string(tasks.size()));
  }

  LogPosteriorMatrix original = std::move(scored.front());
  std::vector<LogPosteriorMatrix> masked_set(
      std::make_move_iterator(scored.begin() + 1),
      std::make_move_iterator(scored.end()));
  return run_ilme_precomputed(std::move(original), std::move(masked_set), plan,
                              config, blank_index);
}

/// Diagnostics report, one line per frame:
/// frame<TAB>blank_posterior<TAB>applied<TAB>contributing<TAB>delta_hat...
/// where applied says whether the subtraction fired at that frame and the
/// trailing fields are the K per-mask normalized deltas, all to 6 decimals.
inline std::string format_ilme_diagnostics(const IlmeDiagnostics& diag) {
  std::string out = "# frame\tblank_posterior\tapplied\tcontributing";
  for (std::size_t k = 0; k < diag.delta_hat.size(); ++k) {
    out += "\tdelta_hat_" + std::to_string(k);
  }
  out += '\n';
  char buf[64];
  for (std::size_t t = 0; t < diag.blank_posterior.size(); ++t) {
    std::snprintf(buf, sizeof(buf), "%zu\t%.6f\t%d\t%d", t,
                  diag.blank_posterior[t], diag.adjusted[t] ? 1 : 0,
                  diag.contributing[t]);
    out += buf;
    for (const std::vector<double>& dh : diag.delta_hat) {
      std::snprintf(buf, sizeof(buf), "\t%.6f", dh[t]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace ctcdec

#endif  // CTCDEC_ILME_HPP_
