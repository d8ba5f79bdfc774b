// ctcdec/decoder.hpp

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

#ifndef CTCDEC_DECODER_HPP_
#define CTCDEC_DECODER_HPP_

// CTC prefix beam search with optional shallow fusion, plus greedy decoding.
// The decoder consumes a T x N score matrix and knows nothing about where it
// came from; ILM-adjusted scores enter through the same door as raw
// log-posteriors and are treated as unnormalized log-scores (no
// renormalization inside the path-sum recursion).

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ctcdec/ctc.hpp"
#include "ctcdec/errors.hpp"
#include "ctcdec/matrix.hpp"
#include "ctcdec/ngram.hpp"
#include "ctcdec/numeric.hpp"
#include "ctcdec/vocabulary.hpp"

namespace ctcdec {

/// Fusion granularity: score each subword token as it is emitted, or buffer
/// subwords and score whole words at word-start boundaries.
enum class LmGranularity { kToken, kWord };

struct DecodeConfig {
  std::int32_t beam_size = 50;
  double lambda_lm = 1.0;               // shallow-fusion weight
  double token_insertion_bonus = 0.0;   // per emitted token, added to totals
  // Tokens scoring below best-of-frame minus this are skipped.
  double prune_log_threshold = std::numeric_limits<double>::infinity();
  LmGranularity lm_granularity = LmGranularity::kToken;

  void validate() const {
    if (beam_size < 1) {
      throw UsageError("beam_size must be >= 1");
    }
    if (!(lambda_lm >= 0.0)) {
      throw UsageError("lambda_lm must be >= 0");
    }
    if (!(prune_log_threshold >= 0.0)) {
      throw UsageError("prune_log_threshold must be >= 0");
    }
  }
};

/// Per-frame argmax path, collapsed. Ties break toward the lowest token
/// index. The acoustic score is the path's frame-score sum.
inline Hypothesis greedy_decode(const Matrix& scores,
                                const Vocabulary& vocabulary) {
  if (scores.rows() < 1 ||
      scores.cols() != static_cast<std::size_t>(vocabulary.size())) {
    throw UsageError("greedy_decode: scores must be T x N with T >= 1");
  }
  std::vector<std::int32_t> path(scores.rows());
  double acoustic = 0.0;
  for (std::size_t t = 0; t < scores.rows(); ++t) {
    std::span<const double> row = scores.row(t);
    std::size_t arg = 0;
    for (std::size_t n = 1; n < row.size(); ++n) {
      if (row[n] > row[arg]) arg = n;
    }
    path[t] = static_cast<std::int32_t>(arg);
    acoustic += row[arg];
  }
  Hypothesis hyp;
  hyp.tokens = collapse_ctc(path, vocabulary.blank_index(), vocabulary.size());
  hyp.acoustic_score = acoustic;
  hyp.total_score = acoustic;
  return hyp;
}

namespace detail {

/// Caller-held fusion bookkeeping for one prefix. `total` holds the LM
/// log-prob scored so far; in word mode `pending` is the word under
/// construction, scored at the next boundary or at finalization.
struct FusionState {
  NGramModel::State context;
  std::string pending;
  double total = 0.0;
};

struct BeamScores {
  double p_blank = kNegInf;     // log mass of paths ending in blank
  double p_nonblank = kNegInf;  // log mass of paths ending in the last token
  FusionState lm;

  double merged() const { return log_add(p_blank, p_nonblank); }
};

// Prefixes live in a hash-consed trie: one node per surviving prefix, so
// prefix identity is pointer identity and beam merging never copies or
// compares token vectors. nullptr is the empty prefix.
struct PrefixNode {
  const PrefixNode* parent;
  std::int32_t token;
  std::int32_t length;
};

inline std::int32_t prefix_length(const PrefixNode* node) {
  return node == nullptr ? 0 : node->length;
}

inline std::vector<std::int32_t> prefix_tokens(const PrefixNode* node) {
  std::vector<std::int32_t> out(prefix_length(node));
  for (std::size_t i = out.size(); node != nullptr; node = node->parent) {
    out[--i] = node->token;
  }
  return out;
}

inline const PrefixNode* prefix_ancestor(const PrefixNode* node,
                                         std::int32_t length) {
  while (prefix_length(node) > length) node = node->parent;
  return node;
}

/// Lexicographic comparison of the token sequences two nodes spell out;
/// equal sequences imply equal nodes for interned prefixes, but the compare
/// is correct for detached scratch nodes too.
inline int prefix_compare(const PrefixNode* a, const PrefixNode* b) {
  if (a == b) return 0;
  std::int32_t la = prefix_length(a);
  std::int32_t lb = prefix_length(b);
  if (la > lb) {
    int c = prefix_compare(prefix_ancestor(a, lb), b);
    return c != 0 ? c : 1;
  }
  if (lb > la) {
    int c = prefix_compare(a, prefix_ancestor(b, la));
    return c != 0 ? c : -1;
  }
  if (la == 0) return 0;
  int c = prefix_compare(a->parent, b->parent);
  if (c != 0) return c;
  if (a->token != b->token) return a->token < b->token ? -1 : 1;
  return 0;
}

// Identity of a candidate prefix for in-frame merging: the parent node plus
// the final token (token -1 with a null parent is the empty prefix). Both
// the emitting extension of `parent` by `token` and the non-emitting update
// of the active node spelling the same sequence produce the same key.
struct PrefixKey {
  const PrefixNode* parent = nullptr;
  std::int32_t token = -1;

  friend bool operator==(const PrefixKey&, const PrefixKey&) = default;
};

struct PrefixKeyHash {
  std::size_t operator()(const PrefixKey& key) const {
    std::uint64_t h = reinterpret_cast<std::uintptr_t>(key.parent);
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(key.token))
         << 1;
    h *= 0x9e3779b97f4a7c15ULL;
    h ^= h >> 29;
    return static_cast<std::size_t>(h);
  }
};

inline int prefix_key_compare(const PrefixKey& a, const PrefixKey& b) {
  PrefixNode scratch_a{a.parent, a.token,
                       prefix_length(a.parent) + 1};
  PrefixNode scratch_b{b.parent, b.token,
                       prefix_length(b.parent) + 1};
  const PrefixNode* na = a.token < 0 ? nullptr : &scratch_a;
  const PrefixNode* nb = b.token < 0 ? nullptr : &scratch_b;
  return prefix_compare(na, nb);
}

/// Open-addressing scratch table for the per-frame prefix merge. Slots are
/// invalidated wholesale by a generation stamp, so a frame change costs
/// nothing and slot payloads (including FusionState buffers) get reused
/// instead of reallocated.
class BeamTable {
 public:
  struct Slot {
    PrefixKey key;
    BeamScores beam;
    std::uint32_t stamp = 0;
  };

  void begin_frame(std::size_t expected) {
    std::size_t want = 16;
    while (want < 2 * expected) want <<= 1;
    if (slots_.size() < want) {
      slots_.assign(want, Slot{});
      stamp_ = 0;
    }
    ++stamp_;
    count_ = 0;
  }

  std::size_t size() const { return count_; }

  /// Returns the slot for `key`, claiming and resetting it on first touch.
  std::pair<BeamScores*, bool> find_or_insert(const PrefixKey& key) {
    std::size_t mask = slots_.size() - 1;
    std::size_t i = PrefixKeyHash{}(key) & mask;
    while (true) {
      Slot& slot = slots_[i];
      if (slot.stamp != stamp_) {
        slot.stamp = stamp_;
        slot.key = key;
        slot.beam.p_blank = kNegInf;
        slot.beam.p_nonblank = kNegInf;
        slot.beam.lm.pending.clear();
        slot.beam.lm.context.context.clear();
        slot.beam.lm.total = 0.0;
        ++count_;
        return {&slot.beam, true};
      }
      if (slot.key == key) {
        return {&slot.beam, false};
      }
      i = (i + 1) & mask;
    }
  }

  template <class Fn>
  void for_each(Fn&& fn) {
    for (Slot& slot : slots_) {
      if (slot.stamp == stamp_) fn(slot.key, slot.beam);
    }
  }

 private:
  std::vector<Slot> slots_;
  std::uint32_t stamp_ = 0;
  std::size_t count_ = 0;
};

class FusionScorer {
 public:
  FusionScorer(const NGramModel* lm, const Vocabulary& vocabulary,
               LmGranularity granularity)
      : lm_(lm), vocab_(vocabulary), granularity_(granularity) {
    if (lm_ == nullptr) return;
    if (!lm_->has_sentence_markers()) {
      throw ConfigError("fusion LM lacks " + lm_->bos_symbol() + "/" +
                        lm_->eos_symbol() + " entries");
    }
    if (granularity_ == LmGranularity::kToken) {
      lm_ids_.resize(vocab_.size());
      for (std::int32_t i = 0; i < vocab_.size(); ++i) {
        if (i == vocab_.blank_index()) {
          lm_ids_[i] = -1;
          continue;
        }
        try {
          lm_ids_[i] = lm_->id_or_unk(vocab_.token(i));
        } catch (const ScoringError& e) {
          throw ConfigError(std::string("LM/vocabulary mismatch: ") +
                            e.what());
        }
      }
    }
  }

  FusionState begin() const {
    FusionState s;
    if (lm_ != nullptr) s.context = lm_->begin_state();
    return s;
  }

  /// Extends a prefix's fusion state by one emitted token.
  FusionState advance(const FusionState& state, std::int32_t token) const {
    FusionState next = state;
    if (lm_ == nullptr) return next;
    if (granularity_ == LmGranularity::kToken) {
      next.total += lm_->score_next_id(next.context, lm_ids_[token]);
      return next;
    }
    bool starts_word = vocab_.word_start_marker().empty() ||
                       vocab_.is_word_start(token);
    if (starts_word && !next.pending.empty()) {
      next.total += lm_->score_next(next.context, next.pending);
      next.pending.clear();
    }
    next.pending += vocab_.piece(token);
    return next;
  }

  /// Full sentence LM log-prob for a finished prefix (pending word plus
  /// end-of-sentence).
  double finish(const FusionState& state) const {
    if (lm_ == nullptr) return 0.0;
    FusionState s = state;
    if (granularity_ == LmGranularity::kWord && !s.pending.empty()) {
      s.total += lm_->score_next(s.context, s.pending);
    }
    return s.total + lm_->end_score(s.context);
  }

 private:
  const NGramModel* lm_;
  const Vocabulary& vocab_;
  LmGranularity granularity_;
  std::vector<std::int32_t> lm_ids_;
};

}  // namespace detail

/// Standard CTC prefix beam search with blank/non-blank bookkeeping and
/// shallow fusion. The LM increment fires on emitting extensions only (a new
/// token, or a repeat after blank — never on blank itself), and
/// end-of-sentence is folded in at finalization. Returns up to beam_size
/// hypotheses ranked by total score, ties broken by lexicographic prefix
/// order.
inline std::vector<Hypothesis> beam_decode(const Matrix& scores,
                                           const Vocabulary& vocabulary,
                                           const NGramModel* lm,
                                           const DecodeConfig& config) {
  config.validate();
  if (scores.rows() < 1 ||
      scores.cols() != static_cast<std::size_t>(vocabulary.size())) {
    throw UsageError("beam_decode: scores must be T x N with T >= 1");
  }
  const std::int32_t blank = vocabulary.blank_index();
  const std::size_t vocab_size = scores.cols();
  detail::FusionScorer fusion(lm, vocabulary, config.lm_granularity);

  // Interned prefix nodes; only pruning survivors are ever materialized, so
  // the arena stays O(beam_size * frames).
  std::deque<detail::PrefixNode> arena;
  std::unordered_map<detail::PrefixKey, const detail::PrefixNode*,
                     detail::PrefixKeyHash> interned;
  auto intern = [&](const detail::PrefixKey& key) -> const detail::PrefixNode* {
    if (key.token < 0) return nullptr;
    auto [it, inserted] = interned.try_emplace(key, nullptr);
    if (inserted) {
      arena.push_back({key.parent, key.token,
                       detail::prefix_length(key.parent) + 1});
      it->second = &arena.back();
    }
    return it->second;
  };

  // Active beams stay sorted lexicographically so score accumulation order
  // (and therefore every output bit) is independent of hash layout.
  struct Active {
    const detail::PrefixNode* node;
    detail::BeamScores beam;
  };
  std::vector<Active> active;
  {
    detail::BeamScores init;
    init.p_blank = 0.0;
    init.lm = fusion.begin();
    active.push_back({nullptr, std::move(init)});
  }

  auto rank_of = [&](const detail::PrefixKey& key,
                     const detail::BeamScores& beam) {
    std::int32_t length = detail::prefix_length(key.parent) +
                          (key.token < 0 ? 0 : 1);
    return beam.merged() + config.lambda_lm * beam.lm.total +
           config.token_insertion_bonus * static_cast<double>(length);
  };

  detail::BeamTable next;
  std::vector<std::int32_t> candidates;
  struct Ranked {
    double rank;
    const detail::PrefixKey* key;
    detail::BeamScores* beam;
  };
  std::vector<Ranked> order;
  for (std::size_t t = 0; t < scores.rows(); ++t) {
    std::span<const double> row = scores.row(t);
    double best = *std::max_element(row.begin(), row.end());
    candidates.clear();
    for (std::size_t n = 0; n < vocab_size; ++n) {
      if (row[n] >= best - config.prune_log_threshold) {
        candidates.push_back(static_cast<std::int32_t>(n));
      }
    }

    next.begin_frame(active.size() * (candidates.size() + 1));
    auto ensure_same = [&](const Active& entry) -> detail::BeamScores& {
      detail::PrefixKey key{
          entry.node == nullptr ? nullptr : entry.node->parent,
          entry.node == nullptr ? -1 : entry.node->token};
      auto [beam, inserted] = next.find_or_insert(key);
      if (inserted) beam->lm = entry.beam.lm;
      return *beam;
    };
    auto ensure_extended = [&](const Active& entry,
                               std::int32_t token) -> detail::BeamScores& {
      auto [beam, inserted] =
          next.find_or_insert(detail::PrefixKey{entry.node, token});
      if (inserted) beam->lm = fusion.advance(entry.beam.lm, token);
      return *beam;
    };

    for (const Active& entry : active) {
      const detail::BeamScores& beam = entry.beam;
      std::int32_t last = entry.node == nullptr ? -1 : entry.node->token;
      for (std::int32_t n : candidates) {
        double s = row[n];
        if (n == blank) {
          detail::BeamScores& nb = ensure_same(entry);
          nb.p_blank = log_add(nb.p_blank, beam.merged() + s);
        } else if (n == last) {
          // Same symbol again: collapses into the prefix unless a blank
          // intervened, in which case it emits.
          detail::BeamScores& nb = ensure_same(entry);
          nb.p_nonblank = log_add(nb.p_nonblank, beam.p_nonblank + s);

          detail::BeamScores& eb = ensure_extended(entry, n);
          eb.p_nonblank = log_add(eb.p_nonblank, beam.p_blank + s);
        } else {
          detail::BeamScores& eb = ensure_extended(entry, n);
          eb.p_nonblank = log_add(eb.p_nonblank, beam.merged() + s);
        }
      }
    }

    // Keep the top beam_size candidates; ranking ties break toward the
    // lexicographically smaller prefix, which makes the selection a total
    // order regardless of hash layout.
    order.clear();
    order.reserve(next.size());
    next.for_each([&](const detail::PrefixKey& key,
                      detail::BeamScores& beam) {
      order.push_back({rank_of(key, beam), &key, &beam});
    });
    std::size_t keep = std::min(order.size(),
                                static_cast<std::size_t>(config.beam_size));
    auto better = [](const Ranked& a, const Ranked& b) {
      if (a.rank != b.rank) return a.rank > b.rank;
      return detail::prefix_key_compare(*a.key, *b.key) < 0;
    };
    if (keep < order.size()) {
      std::partial_sort(order.begin(), order.begin() + keep, order.end(),
                        better);
      order.resize(keep);
    }
    active.clear();
    active.reserve(order.size());
    for (const Ranked& r : order) {
      active.push_back({intern(*r.key), std::move(*r.beam)});
    }
    std::sort(active.begin(), active.end(), [](const Active& a,
                                               const Active& b) {
      return detail::prefix_compare(a.node, b.node) < 0;
    });
  }

  std::vector<Hypothesis> out;
  out.reserve(active.size());
  for (const Active& entry : active) {
    Hypothesis hyp;
    hyp.tokens = detail::prefix_tokens(entry.node);
    hyp.acoustic_score = entry.beam.merged();
    hyp.lm_score = fusion.finish(entry.beam.lm);
    hyp.total_score =
        hyp.acoustic_score + config.lambda_lm * hyp.lm_score +
        config.token_insertion_bonus *
            static_cast<double>(hyp.tokens.size());
    out.push_back(std::move(hyp));
  }
  std::sort(out.begin(), out.end(), [](const Hypothesis& a,
                                       const Hypothesis& b) {
    if (a.total_score != b.total_score) return a.total_score > b.total_score;
    return a.tokens < b.tokens;
  });
  return out;
}

}  // namespace ctcdec

#endif  // CTCDEC_DECODER_HPP_
