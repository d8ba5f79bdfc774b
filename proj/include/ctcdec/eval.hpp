// ctcdec/eval.hpp

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

#ifndef CTCDEC_EVAL_HPP_
#define CTCDEC_EVAL_HPP_

// WER and OOV-detection metrics. Corpus WER pools edit counts over
// utterances ((S+D+I)/R on the sums), never the mean of per-utterance WERs.
// OOV detection uses per-utterance min-count matching: each utterance
// contributes min(count_hyp, count_ref) true positives per term.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ctcdec/errors.hpp"

namespace ctcdec {

struct EditCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t reference_words = 0;

  std::size_t total_edits() const {
    return substitutions + deletions + insertions;
  }
  /// (S+D+I)/R; an empty reference scores insertions against a floor of 1
  /// and is reported distinctly via reference_words == 0.
  double wer() const {
    return static_cast<double>(total_edits()) /
           static_cast<double>(std::max<std::size_t>(1, reference_words));
  }

  EditCounts& operator+=(const EditCounts& other) {
    substitutions += other.substitutions;
    deletions += other.deletions;
    insertions += other.insertions;
    reference_words += other.reference_words;
    return *this;
  }
};

/// Minimal-edit alignment with unit costs; among minimal alignments the one
/// with fewer insertions, then fewer deletions, wins (lexicographic DP on
/// (total, insertions, deletions)).
inline EditCounts word_error_rate(std::span<const std::string> reference,
                                  std::span<const std::string> hypothesis) {
  struct Cost {
    std::size_t total, ins, del;
    bool operator<(const Cost& o) const {
      if (total != o.total) return total < o.total;
      if (ins != o.ins) return ins < o.ins;
      return del < o.del;
    }
  };
  const std::size_t nr = reference.size();
  const std::size_t nh = hypothesis.size();
  std::vector<Cost> prev(nh + 1), cur(nh + 1);
  for (std::size_t j = 0; j <= nh; ++j) prev[j] = {j, j, 0};
  for (std::size_t i = 1; i <= nr; ++i) {
    cur[0] = {i, 0, i};
    for (std::size_t j = 1; j <= nh; ++j) {
      bool match = reference[i - 1] == hypothesis[j - 1];
      Cost diag = prev[j - 1];
      if (!match) diag.total += 1;
      Cost ins = cur[j - 1];
      ins.total += 1;
      ins.ins += 1;
      Cost del = prev[j];
      del.total += 1;
      del.del += 1;
      cur[j] = std::min(diag, std::min(ins, del));
    }
    std::swap(prev, cur);
  }
  const Cost& best = prev[nh];
  EditCounts counts;
  counts.insertions = best.ins;
  counts.deletions = best.del;
  counts.substitutions = best.total - best.ins - best.del;
  counts.reference_words = nr;
  return counts;
}

/// Whitespace tokenization with config-controlled case folding (ASCII) and
/// punctuation stripping (ASCII punctuation except apostrophes); tokens that
/// normalize to nothing are dropped.
struct TextNormalizer {
  bool fold_case = true;
  bool strip_punctuation = true;

  std::string word(std::string_view raw) const {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
      unsigned char u = static_cast<unsigned char>(c);
      if (strip_punctuation && u < 0x80 && std::ispunct(u) && c != '\'') {
        continue;
      }
      out.push_back(fold_case && u < 0x80
                        ? static_cast<char>(std::tolower(u))
                        : c);
    }
    return out;
  }

  std::vector<std::string> words(std::string_view line) const {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(
                                    line[i]))) {
        ++i;
      }
      std::size_t start = i;
      while (i < line.size() && !std::isspace(static_cast<unsigned char>(
                                     line[i]))) {
        ++i;
      }
      if (i > start) {
        std::string w = word(line.substr(start, i - start));
        if (!w.empty()) out.push_back(std::move(w));
      }
    }
    return out;
  }
};

struct OovReport {
  struct TermCounts {
    std::size_t true_positives = 0;
    std::size_t hypothesis_count = 0;
    std::size_t reference_count = 0;
  };

  std::size_t true_positives = 0;
  std::size_t hypothesis_count = 0;  // OOV-term occurrences in hypotheses
  std::size_t reference_count = 0;   // OOV-term occurrences in references
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::map<std::string, TermCounts> per_term;
};

/// Detection scores over paired (reference, hypothesis) word sequences:
/// TP per utterance and term = min(count_hyp, count_ref); precision and
/// recall pool occurrences over the whole corpus, F1 is their harmonic mean
/// (0 when both are 0).
inline OovReport oov_f1(
    std::span<const std::pair<std::vector<std::string>,
                              std::vector<std::string>>> utterances,
    const std::set<std::string>& oov_terms) {
  if (oov_terms.empty()) {
    throw UsageError("oov_f1: empty OOV term set");
  }
  OovReport report;
  std::unordered_map<std::string, std::size_t> ref_counts, hyp_counts;
  for (const auto& [reference, hypothesis] : utterances) {
    ref_counts.clear();
    hyp_counts.clear();
    for (const std::string& w : reference) {
      if (oov_terms.count(w)) ++ref_counts[w];
    }
    for (const std::string& w : hypothesis) {
      if (oov_terms.count(w)) ++hyp_counts[w];
    }
    for (const auto& [term, rc] : ref_counts) {
      auto it = hyp_counts.find(term);
      std::size_t hc = it == hyp_counts.end() ? 0 : it->second;
      std::size_t tp = std::min(rc, hc);
      report.true_positives += tp;
      report.reference_count += rc;
      OovReport::TermCounts& counts = report.per_term[term];
      counts.true_positives += tp;
      counts.reference_count += rc;
    }
    for (const auto& [term, hc] : hyp_counts) {
      report.hypothesis_count += hc;
      report.per_term[term].hypothesis_count += hc;
    }
  }
  if (report.hypothesis_count > 0) {
    report.precision = static_cast<double>(report.true_positives) /
                       static_cast<double>(report.hypothesis_count);
  }
  if (report.reference_count > 0) {
    report.recall = static_cast<double>(report.true_positives) /
                    static_cast<double>(report.reference_count);
  }
  if (report.precision + report.recall > 0.0) {
    report.f1 = 2.0 * report.precision * report.recall /
                (report.precision + report.recall);
  }
  return report;
}

/// Reference words absent from the training vocabulary (both sides already
/// normalized); duplicates collapse to one term.
inline std::set<std::string> mine_oov(
    std::span<const std::vector<std::string>> reference_corpus,
    const std::unordered_set<std::string>& training_vocabulary) {
  std::set<std::string> terms;
  for (const auto& utterance : reference_corpus) {
    for (const std::string& w : utterance) {
      if (!training_vocabulary.count(w)) terms.insert(w);
    }
  }
  return terms;
}

struct UtteranceEval {
  std::string utterance_id;
  EditCounts counts;
};

struct CorpusEval {
  std::vector<UtteranceEval> utterances;  // utterance-id order
  EditCounts pooled;
  std::size_t missing_hypotheses = 0;  // paired against an empty hypothesis

  double wer() const { return pooled.wer(); }
};

/// Pairs references and hypotheses by utterance id (a missing hypothesis
/// counts as empty) and pools the edit counts in id order.
inline CorpusEval evaluate_corpus(
    const std::map<std::string, std::vector<std::string>>& references,
    const std::map<std::string, std::vector<std::string>>& hypotheses) {
  CorpusEval eval;
  static const std::vector<std::string> kEmpty;
  for (const auto& [id, ref] : references) {
    auto it = hypotheses.find(id);
    const std::vector<std::string>& hyp =
        it == hypotheses.end() ? kEmpty : it->second;
    if (it == hypotheses.end()) ++eval.missing_hypotheses;
    EditCounts counts = word_error_rate(ref, hyp);
    eval.pooled += counts;
    eval.utterances.push_back({id, counts});
  }
  return eval;
}

/// One scored decoding run in a comparison grid.
struct MethodEval {
  std::string method;    // e.g. "BS", "SF", "ILME"
  std::string lm_label;  // e.g. "no LM", "source LM", "target LM"
  CorpusEval corpus;
  std::optional<OovReport> oov;
  std::optional<double> werr;  // relative to the grid's baseline
};

/// Fills werr = (WER_base - WER) / WER_base against the named baseline row.
inline void compute_werr(std::vector<MethodEval>& rows,
                         std::string_view baseline_method) {
  const MethodEval* base = nullptr;
  for (const MethodEval& row : rows) {
    if (row.method == baseline_method) {
      base = &row;
      break;
    }
  }
  if (base == nullptr) {
    throw UsageError("baseline method '" + std::string(baseline_method) +
                     "' not among the evaluated runs");
  }
  double base_wer = base->corpus.wer();
  for (MethodEval& row : rows) {
    row.werr = base_wer > 0.0
                   ? (base_wer - row.corpus.wer()) / base_wer
                   : (row.corpus.wer() == 0.0 ? 0.0 : -1.0);
  }
}

/// Aligned plain-text grid: method, LM, WER, relative WERR, and OOV F1 when
/// available. The header records the matching rule so the numbers are
/// interpretable on their own.
inline std::string format_eval_grid(std::span<const MethodEval> rows,
                                    std::string_view baseline_method) {
  char buf[160];
  std::string out;
  out += "# corpus WER = pooled (S+D+I)/R; WERR relative to ";
  out += baseline_method;
  out += "\n# OOV F1 = per-utterance min-count matching over the term set\n";
  std::snprintf(buf, sizeof(buf), "%-12s %-12s %8s %9s %8s\n", "method", "LM",
                "WER", "WERR", "OOV-F1");
  out += buf;
  for (const MethodEval& row : rows) {
    std::string werr = "-";
    if (row.werr) {
      std::snprintf(buf, sizeof(buf), "%+.1f%%", *row.werr * 100.0);
      werr = buf;
    }
    std::string f1 = "-";
    if (row.oov) {
      std::snprintf(buf, sizeof(buf), "%.3f", row.oov->f1);
      f1 = buf;
    }
    std::snprintf(buf, sizeof(buf), "%-12s %-12s %8.3f %9s %8s\n",
                  row.method.c_str(), row.lm_label.c_str(), row.corpus.wer(),
                  werr.c_str(), f1.c_str());
    out += buf;
  }
  return out;
}

}  // namespace ctcdec

#endif  // CTCDEC_EVAL_HPP_
