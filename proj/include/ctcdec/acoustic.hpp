// ctcdec/acoustic.hpp

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

#ifndef CTCDEC_ACOUSTIC_HPP_
#define CTCDEC_ACOUSTIC_HPP_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ctcdec/errors.hpp"
#include "ctcdec/lpm_io.hpp"
#include "ctcdec/matrix.hpp"
#include "ctcdec/prng.hpp"

namespace ctcdec {

/// Mask id of the unmasked original in manifests and scoring batches.
inline constexpr std::int32_t kOriginalMask = -1;

/// One sequence in a scoring batch. Feature-backed scorers read `features`
/// and ignore the ids; the file-backed scorer resolves (utterance_id,
/// mask_index) to a precomputed matrix and may be handed empty features.
struct ScoreTask {
  std::string utterance_id;
  std::int32_t mask_index = kOriginalMask;
  FeatureSequence features;
};

/// Anything that maps (possibly masked) inputs to per-frame log-posteriors.
/// Implementations are immutable after construction and deterministic:
/// identical batches produce bit-identical outputs, rows normalized per the
/// LogPosteriorMatrix invariants, one output per input with the same T.
class AcousticScorer {
 public:
  virtual ~AcousticScorer() = default;
  virtual std::vector<LogPosteriorMatrix> score_batch(
      std::span<const ScoreTask> batch) const = 0;
};

/// Scores a batch of plain feature sequences. Inputs must be non-empty and
/// share a feature dimension; failures surface as ScoringError carrying the
/// failing batch index.
inline std::vector<LogPosteriorMatrix> score_batch(
    const AcousticScorer& scorer, std::span<const FeatureSequence> inputs) {
  if (inputs.empty()) {
    throw UsageError("score_batch: empty batch");
  }
  std::vector<ScoreTask> tasks(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].cols() != inputs[0].cols()) {
      throw ScoringError("score_batch: feature dimension mismatch", i);
    }
    tasks[i].features = inputs[i];
  }
  return scorer.score_batch(tasks);
}

/// Deterministic convolutional stand-in for a real CTC model. One hidden
/// softsign layer over a +-context_radius frame window (zero padding at the
/// edges) plus two frame-local channels feeding the logits: the frame's RMS
/// energy and its per-dimension magnitudes. The output row at frame t
/// therefore depends on input frames [t - r, t + r] only and reacts strongly
/// whenever frame t itself is zeroed. Weights come from a SplitMix64 stream,
/// so (seed, dimensions) reproduce the model exactly.
class ToyConvModel final : public AcousticScorer {
 public:
  ToyConvModel(std::uint64_t seed, std::int32_t feature_dim,
               std::int32_t vocab_size, std::int32_t context_radius,
               std::int32_t hidden_dim = 16)
      : dim_(feature_dim),
        vocab_(vocab_size),
        radius_(context_radius),
        hidden_(hidden_dim) {
    if (dim_ < 1 || vocab_ < 2 || radius_ < 0 || hidden_ < 1) {
      throw UsageError("ToyConvModel: bad dimensions");
    }
    std::int32_t window = 2 * radius_ + 1;
    SplitMix64 rng(seed);
    double in_scale = 1.0 / std::sqrt(static_cast<double>(window * dim_));
    double out_scale = 1.0 / std::sqrt(static_cast<double>(hidden_));
    w_in_.resize(static_cast<std::size_t>(hidden_) * window * dim_);
    for (double& w : w_in_) w = rng.next_symmetric() * in_scale;
    b_in_.resize(hidden_);
    for (double& b : b_in_) b = rng.next_symmetric() * 0.1;
    w_out_.resize(static_cast<std::size_t>(vocab_) * hidden_);
    for (double& w : w_out_) w = rng.next_symmetric() * out_scale * 1.5;
    b_out_.resize(vocab_);
    for (double& b : b_out_) b = rng.next_symmetric() * 0.1;
    w_energy_.resize(vocab_);
    for (double& w : w_energy_) w = rng.next_symmetric() * 8.0;
    double abs_scale = 4.0 / std::sqrt(static_cast<double>(dim_));
    w_abs_.resize(static_cast<std::size_t>(vocab_) * dim_);
    for (double& w : w_abs_) w = rng.next_symmetric() * abs_scale;
  }

  std::int32_t feature_dim() const { return dim_; }
  std::int32_t vocab_size() const { return vocab_; }
  std::int32_t context_radius() const { return radius_; }

  LogPosteriorMatrix score(const FeatureSequence& features) const {
    if (features.rows() < 1 ||
        features.cols() != static_cast<std::size_t>(dim_)) {
      throw UsageError("ToyConvModel: expected T x " + std::to_string(dim_) +
                       " features, got " + std::to_string(features.rows()) +
                       " x " + std::to_string(features.cols()));
    }
    std::size_t frames = features.rows();
    std::int32_t window = 2 * radius_ + 1;
    LogPosteriorMatrix out(frames, static_cast<std::size_t>(vocab_));
    std::vector<double> hidden(hidden_);
    for (std::size_t t = 0; t < frames; ++t) {
      for (std::int32_t h = 0; h < hidden_; ++h) {
        double acc = b_in_[h];
        const double* w =
            w_in_.data() + static_cast<std::size_t>(h) * window * dim_;
        for (std::int32_t j = 0; j < window; ++j) {
          std::int64_t src = static_cast<std::int64_t>(t) + j - radius_;
          if (src < 0 || src >= static_cast<std::int64_t>(frames)) continue;
          std::span<const double> row = features.row(src);
          for (std::int32_t d = 0; d < dim_; ++d) {
            acc += w[j * dim_ + d] * row[d];
          }
        }
        hidden[h] = acc / (1.0 + std::fabs(acc));  // softsign
      }
      std::span<const double> frame = features.row(t);
      double energy = 0.0;  // RMS of the current frame's features
      for (double v : frame) energy += v * v;
      energy = std::sqrt(energy / static_cast<double>(dim_));
      std::span<double> logits = out.row(t);
      for (std::int32_t n = 0; n < vocab_; ++n) {
        double acc = b_out_[n] + w_energy_[n] * energy;
        const double* w = w_out_.data() + static_cast<std::size_t>(n) * hidden_;
        for (std::int32_t h = 0; h < hidden_; ++h) {
          acc += w[h] * hidden[h];
        }
        const double* wa = w_abs_.data() + static_cast<std::size_t>(n) * dim_;
        for (std::int32_t d = 0; d < dim_; ++d) {
          acc += wa[d] * std::fabs(frame[d]);
        }
        logits[n] = acc;
      }
      log_softmax_inplace(logits);
    }
    return out;
  }

  std::vector<LogPosteriorMatrix> score_batch(
      std::span<const ScoreTask> batch) const override {
    if (batch.empty()) {
      throw UsageError("score_batch: empty batch");
    }
    std::vector<LogPosteriorMatrix> out;
    out.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      try {
        out.push_back(score(batch[i].features));
      } catch (const UsageError& e) {
        throw ScoringError(e.what(), i);
      }
    }
    return out;
  }

 private:
  std::int32_t dim_, vocab_, radius_, hidden_;
  std::vector<double> w_in_, b_in_, w_out_, b_out_, w_energy_, w_abs_;
};

/// (utterance-id, mask-id) -> LPM path bindings.
using LpmManifest = std::map<std::string, std::map<std::int32_t,
                                                   std::filesystem::path>>;

/// Manifest file: one record per line, "utterance-id<TAB>mask-id<TAB>path".
/// Mask id -1 is the unmasked original. Relative paths resolve against the
/// manifest's own directory.
inline LpmManifest load_lpm_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw FormatError("cannot open manifest " + path.string());
  }
  std::filesystem::path base = path.parent_path();
  LpmManifest manifest;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t tab1 = line.find('\t');
    std::size_t tab2 =
        tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos || tab2 == std::string::npos || tab1 == 0) {
      throw ParseError(path.string() + ": expected 'utt<TAB>mask<TAB>path'",
                       lineno);
    }
    std::string utt = line.substr(0, tab1);
    std::int32_t mask;
    try {
      mask = std::stoi(line.substr(tab1 + 1, tab2 - tab1 - 1));
    } catch (const std::exception&) {
      throw ParseError(path.string() + ": bad mask id", lineno);
    }
    std::filesystem::path p(line.substr(tab2 + 1));
    if (p.empty()) {
      throw ParseError(path.string() + ": empty path", lineno);
    }
    if (p.is_relative()) p = base / p;
    manifest[utt][mask] = std::move(p);
  }
  return manifest;
}

/// Serves precomputed log-posteriors by (utterance-id, mask-id) key; this is
/// how models run elsewhere feed the engine. When a task carries non-empty
/// features, their frame count must agree with the stored matrix.
class FileScorer final : public AcousticScorer {
 public:
  explicit FileScorer(LpmManifest manifest) : manifest_(std::move(manifest)) {}

  static FileScorer from_manifest_file(const std::filesystem::path& path) {
    return FileScorer(load_lpm_manifest(path));
  }

  const LpmManifest& manifest() const { return manifest_; }

  LogPosteriorMatrix load(const std::string& utterance_id,
                          std::int32_t mask_index) const {
    auto utt = manifest_.find(utterance_id);
    if (utt == manifest_.end()) {
      throw ScoringError("no manifest entry for utterance '" + utterance_id +
                         "'");
    }
    auto entry = utt->second.find(mask_index);
    if (entry == utt->second.end()) {
      throw ScoringError("no manifest entry for utterance '" + utterance_id +
                         "', mask " + std::to_string(mask_index));
    }
    return load_lpm(entry->second);
  }

  std::vector<LogPosteriorMatrix> score_batch(
      std::span<const ScoreTask> batch) const override {
    if (batch.empty()) {
      throw UsageError("score_batch: empty batch");
    }
    std::vector<LogPosteriorMatrix> out;
    out.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const ScoreTask& task = batch[i];
      LogPosteriorMatrix m;
      try {
        m = load(task.utterance_id, task.mask_index);
      } catch (const ScoringError& e) {
        throw ScoringError(e.what(), i);
      } catch (const FormatError& e) {
        throw ScoringError(e.what(), i);
      }
      if (!task.features.empty() && task.features.rows() != m.rows()) {
        throw ScoringError("frame count mismatch for utterance '" +
                               task.utterance_id + "': features have " +
                               std::to_string(task.features.rows()) +
                               ", matrix has " + std::to_string(m.rows()),
                           i);
      }
      out.push_back(std::move(m));
    }
    return out;
  }

 private:
  LpmManifest manifest_;
};

/// Deterministic synthetic features for toy runs: entries in [-1, 1) drawn
/// from a stream seeded by (seed, utterance id), so a corpus regenerates
/// identically from its manifest alone.
inline FeatureSequence synth_features(std::uint64_t seed,
                                      std::string_view utterance_id,
                                      std::size_t frames, std::size_t dim) {
  if (frames < 1 || dim < 1) {
    throw UsageError("synth_features: need frames >= 1 and dim >= 1");
  }
  SplitMix64 rng(fnv1a64(utterance_id, seed ^ 0x5851f42d4c957f2dULL));
  FeatureSequence out(frames, dim);
  for (double& v : out.data()) v = rng.next_symmetric();
  return out;
}

}  // namespace ctcdec

#endif  // CTCDEC_ACOUSTIC_HPP_
