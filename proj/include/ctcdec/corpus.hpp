// ctcdec/corpus.hpp

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

#ifndef CTCDEC_CORPUS_HPP_
#define CTCDEC_CORPUS_HPP_

// Corpus-level decoding in four modes:
//   baseline  raw posteriors, no fusion
//   sf        raw posteriors + shallow fusion
//   ilme      ILM-adjusted scores, no fusion
//   ilme+sf   ILM-adjusted scores + shallow fusion
// Utterances fan out over a worker pool; results land in input order so the
// outputs are byte-identical regardless of worker count. Per-utterance
// failures are recorded and the run continues.

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "ctcdec/acoustic.hpp"
#include "ctcdec/decoder.hpp"
#include "ctcdec/errors.hpp"
#include "ctcdec/ilme.hpp"
#include "ctcdec/masking.hpp"
#include "ctcdec/ngram.hpp"
#include "ctcdec/vocabulary.hpp"

namespace ctcdec {

enum class DecodeMode { kBaseline, kShallowFusion, kIlme, kIlmeShallowFusion };

inline bool mode_uses_ilme(DecodeMode mode) {
  return mode == DecodeMode::kIlme || mode == DecodeMode::kIlmeShallowFusion;
}

inline bool mode_uses_lm(DecodeMode mode) {
  return mode == DecodeMode::kShallowFusion ||
         mode == DecodeMode::kIlmeShallowFusion;
}

inline DecodeMode parse_decode_mode(std::string_view name) {
  if (name == "baseline") return DecodeMode::kBaseline;
  if (name == "sf") return DecodeMode::kShallowFusion;
  if (name == "ilme") return DecodeMode::kIlme;
  if (name == "ilme+sf") return DecodeMode::kIlmeShallowFusion;
  throw ConfigError("unknown mode '" + std::string(name) +
                    "', expected baseline | sf | ilme | ilme+sf");
}

inline std::string to_string(DecodeMode mode) {
  switch (mode) {
    case DecodeMode::kBaseline: return "baseline";
    case DecodeMode::kShallowFusion: return "sf";
    case DecodeMode::kIlme: return "ilme";
    case DecodeMode::kIlmeShallowFusion: return "ilme+sf";
  }
  return "?";
}

struct CorpusOptions {
  DecodeMode mode = DecodeMode::kBaseline;
  IlmConfig ilm;
  DecodeConfig decode;
  std::size_t equal_partitions = 5;
  // Per-utterance segment boundaries; nullptr selects equal partitioning.
  const std::map<std::string, std::vector<std::size_t>>* segment_boundaries =
      nullptr;
  std::size_t workers = 1;
  std::size_t nbest = 10;
};

struct UtteranceResult {
  std::string utterance_id;
  std::vector<Hypothesis> nbest;
  std::string text;         // detokenized best hypothesis
  std::string diagnostics;  // ILME modes only
  std::string error;        // non-empty marks a failed utterance

  bool ok() const { return error.empty(); }
};

struct CorpusResult {
  std::vector<UtteranceResult> utterances;  // input order
  std::size_t failures = 0;
};

namespace detail {

template <class Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> cursor{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = cursor.fetch_add(1); i < count;
           i = cursor.fetch_add(1)) {
        fn(i);
      }
    });
  }
  for (std::thread& t : pool) t.join();
}

inline MaskPlan make_plan(std::size_t frames, const std::string& utterance_id,
                          const CorpusOptions& options) {
  if (options.segment_boundaries != nullptr) {
    auto it = options.segment_boundaries->find(utterance_id);
    if (it == options.segment_boundaries->end()) {
      throw UsageError("no segment boundaries for utterance '" +
                       utterance_id + "'");
    }
    return plan_segments(frames, it->second);
  }
  return plan_equal(frames, options.equal_partitions);
}

inline void check_corpus_args(const NGramModel* lm,
                              const CorpusOptions& options) {
  options.ilm.validate();
  options.decode.validate();
  if (mode_uses_lm(options.mode) && lm == nullptr) {
    throw ConfigError("mode '" + to_string(options.mode) +
                      "' requires a fusion LM");
  }
}

inline void finish_utterance(UtteranceResult& result, const Matrix& scores,
                             const Vocabulary& vocabulary,
                             const NGramModel* lm,
                             const CorpusOptions& options) {
  const NGramModel* fusion = mode_uses_lm(options.mode) ? lm : nullptr;
  std::vector<Hypothesis> hyps =
      beam_decode(scores, vocabulary, fusion, options.decode);
  if (hyps.size() > options.nbest) hyps.resize(options.nbest);
  result.text = vocabulary.detokenize(hyps.front().tokens);
  result.nbest = std::move(hyps);
}

}  // namespace detail

/// File-backed decoding: mask id -1 supplies the raw posteriors; ILME modes
/// additionally read masks 0..K-1 (posteriors of masked inputs computed by
/// the real model elsewhere).
inline CorpusResult decode_corpus(const FileScorer& files,
                                  std::span<const std::string> utterance_ids,
                                  const Vocabulary& vocabulary,
                                  const NGramModel* lm,
                                  const CorpusOptions& options) {
  detail::check_corpus_args(lm, options);
  CorpusResult out;
  out.utterances.resize(utterance_ids.size());
  detail::parallel_for(
      utterance_ids.size(), options.workers, [&](std::size_t i) {
        UtteranceResult& result = out.utterances[i];
        result.utterance_id = utterance_ids[i];
        try {
          LogPosteriorMatrix original =
              files.load(result.utterance_id, kOriginalMask);
          if (!mode_uses_ilme(options.mode)) {
            detail::finish_utterance(result, original, vocabulary, lm,
                                     options);
            return;
          }
          MaskPlan plan = detail::make_plan(original.rows(),
                                            result.utterance_id, options);
          std::vector<LogPosteriorMatrix> masked;
          masked.reserve(plan.mask_count());
          for (std::size_t k = 0; k < plan.mask_count(); ++k) {
            masked.push_back(files.load(result.utterance_id,
                                        static_cast<std::int32_t>(k)));
          }
          IlmeResult ilme = run_ilme_precomputed(
              std::move(original), std::move(masked), plan, options.ilm,
              vocabulary.blank_index());
          result.diagnostics = format_ilme_diagnostics(ilme.diagnostics);
          detail::finish_utterance(result, ilme.adjusted, vocabulary, lm,
                                   options);
        } catch (const std::exception& e) {
          result.error = e.what();
        }
      });
  for (const UtteranceResult& r : out.utterances) {
    if (!r.ok()) ++out.failures;
  }
  return out;
}

/// Feature-backed decoding: the scorer computes posteriors, and ILME modes
/// mask in feature space and re-score.
inline CorpusResult decode_corpus(
    const AcousticScorer& scorer,
    std::span<const std::pair<std::string, FeatureSequence>> utterances,
    const Vocabulary& vocabulary, const NGramModel* lm,
    const CorpusOptions& options) {
  detail::check_corpus_args(lm, options);
  CorpusResult out;
  out.utterances.resize(utterances.size());
  detail::parallel_for(
      utterances.size(), options.workers, [&](std::size_t i) {
        UtteranceResult& result = out.utterances[i];
        result.utterance_id = utterances[i].first;
        const FeatureSequence& features = utterances[i].second;
        try {
          if (!mode_uses_ilme(options.mode)) {
            ScoreTask task{result.utterance_id, kOriginalMask, features};
            LogPosteriorMatrix scores =
                scorer.score_batch({&task, 1}).front();
            detail::finish_utterance(result, scores, vocabulary, lm, options);
            return;
          }
          MaskPlan plan = detail::make_plan(features.rows(),
                                            result.utterance_id, options);
          IlmeResult ilme =
              run_ilme(features, scorer, plan, options.ilm,
                       vocabulary.blank_index(), result.utterance_id);
          result.diagnostics = format_ilme_diagnostics(ilme.diagnostics);
          detail::finish_utterance(result, ilme.adjusted, vocabulary, lm,
                                   options);
        } catch (const std::exception& e) {
          result.error = e.what();
        }
      });
  for (const UtteranceResult& r : out.utterances) {
    if (!r.ok()) ++out.failures;
  }
  return out;
}

/// Transcript lines "utterance-id<TAB>text" for the successful utterances.
inline std::string format_transcripts(const CorpusResult& result) {
  std::string out;
  for (const UtteranceResult& r : result.utterances) {
    if (!r.ok()) continue;
    out += r.utterance_id;
    out += '\t';
    out += r.text;
    out += '\n';
  }
  return out;
}

/// N-best lines "utterance-id<TAB>rank<TAB>acoustic<TAB>ilm<TAB>lm<TAB>text"
/// with the score components to 6 decimals.
inline std::string format_nbest(const CorpusResult& result,
                                const Vocabulary& vocabulary) {
  std::string out;
  char buf[128];
  for (const UtteranceResult& r : result.utterances) {
    if (!r.ok()) continue;
    for (std::size_t rank = 0; rank < r.nbest.size(); ++rank) {
      const Hypothesis& h = r.nbest[rank];
      std::snprintf(buf, sizeof(buf), "\t%zu\t%.6f\t%.6f\t%.6f\t", rank,
                    h.acoustic_score, h.ilm_score, h.lm_score);
      out += r.utterance_id;
      out += buf;
      out += vocabulary.detokenize(h.tokens);
      out += '\n';
    }
  }
  return out;
}

/// Per-utterance failure lines "utterance-id<TAB>message".
inline std::string format_errors(const CorpusResult& result) {
  std::string out;
  for (const UtteranceResult& r : result.utterances) {
    if (r.ok()) continue;
    out += r.utterance_id;
    out += '\t';
    out += r.error;
    out += '\n';
  }
  return out;
}

/// Reads transcript lines "utterance-id<TAB>text" (text may be empty).
inline std::map<std::string, std::string> load_transcripts(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw FormatError("cannot open transcripts " + path.string());
  }
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw ParseError(path.string() + ": expected 'utt<TAB>text'", lineno);
    }
    out[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return out;
}

}  // namespace ctcdec

#endif  // CTCDEC_CORPUS_HPP_
