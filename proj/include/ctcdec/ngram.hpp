// ctcdec/ngram.hpp

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

#ifndef CTCDEC_NGRAM_HPP_
#define CTCDEC_NGRAM_HPP_

// Backoff n-gram language models in the ARPA text format. Probabilities and
// backoff weights are stored base-10 exactly as written; every query API
// returns natural logs.

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ctcdec/errors.hpp"
#include "ctcdec/prng.hpp"

#if defined(CTCDEC_USE_ZLIB)
#include <zlib.h>
#endif

namespace ctcdec {

inline constexpr double kLn10 =
    2.302585092994045684017991454684364208;  // ln(10)

namespace detail {

struct NgramKeyHash {
  std::size_t operator()(const std::vector<std::int32_t>& key) const {
    std::string_view bytes(reinterpret_cast<const char*>(key.data()),
                           key.size() * sizeof(std::int32_t));
    return static_cast<std::size_t>(fnv1a64(bytes));
  }
};

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

class NGramModel {
 public:
  struct Entry {
    double log10_prob = 0.0;
    double log10_backoff = 0.0;  // 0 when absent (multiplier 1)
    bool has_backoff = false;
  };

  /// Incremental scoring state: the most recent (order - 1) token ids,
  /// oldest first. Held by the caller; the model itself never mutates.
  struct State {
    std::vector<std::int32_t> context;
    friend bool operator==(const State&, const State&) = default;
  };

  NGramModel() = default;

  std::int32_t order() const { return order_; }
  std::size_t ngram_count(std::int32_t n) const {
    return tables_[n - 1].size();
  }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  std::optional<std::int32_t> token_id(std::string_view token) const {
    auto it = token_ids_.find(std::string(token));
    return it == token_ids_.end() ? std::nullopt
                                  : std::optional<std::int32_t>(it->second);
  }

  bool has_unk() const { return unk_ >= 0; }
  bool has_sentence_markers() const { return bos_ >= 0 && eos_ >= 0; }
  const std::string& bos_symbol() const { return bos_symbol_; }
  const std::string& eos_symbol() const { return eos_symbol_; }

  /// Maps a surface token to an id, routing unknowns through <unk>.
  std::int32_t id_or_unk(std::string_view token) const {
    if (auto id = token_id(token)) return *id;
    if (unk_ >= 0) return unk_;
    throw ScoringError("token '" + std::string(token) +
                       "' not in LM vocabulary and the model has no " +
                       unk_symbol_);
  }

  /// ln P(word | history) with standard backoff: the longest listed
  /// (history, word) n-gram wins outright; otherwise the history's backoff
  /// weight (1 when unlisted) multiplies the score under the shortened
  /// history.
  double score_ids(std::span<const std::int32_t> history,
                   std::int32_t word) const {
    std::size_t max_hist = static_cast<std::size_t>(order_ - 1);
    if (history.size() > max_hist) {
      history = history.subspan(history.size() - max_hist);
    }
    double backoff_log10 = 0.0;
    std::vector<std::int32_t> key;
    while (true) {
      key.assign(history.begin(), history.end());
      key.push_back(word);
      const auto& table = tables_[key.size() - 1];
      auto it = table.find(key);
      if (it != table.end()) {
        return (backoff_log10 + it->second.log10_prob) * kLn10;
      }
      if (history.empty()) {
        throw ScoringError("token id " + std::to_string(word) +
                           " has no unigram entry");
      }
      key.assign(history.begin(), history.end());
      auto ctx = tables_[key.size() - 1].find(key);
      if (ctx != tables_[key.size() - 1].end() && ctx->second.has_backoff) {
        backoff_log10 += ctx->second.log10_backoff;
      }
      history = history.subspan(1);
    }
  }

  double score_token(std::span<const std::string> history,
                     std::string_view token) const {
    std::vector<std::int32_t> ids;
    ids.reserve(history.size());
    for (const std::string& h : history) ids.push_back(id_or_unk(h));
    return score_ids(ids, id_or_unk(token));
  }

  State begin_state() const {
    State s;
    if (bos_ >= 0) s.context.push_back(bos_);
    return s;
  }

  double score_next_id(State& state, std::int32_t word) const {
    double lp = score_ids(state.context, word);
    state.context.push_back(word);
    std::size_t max_hist = static_cast<std::size_t>(order_ - 1);
    if (state.context.size() > max_hist) {
      state.context.erase(state.context.begin(),
                          state.context.end() - max_hist);
    }
    return lp;
  }

  double score_next(State& state, std::string_view token) const {
    return score_next_id(state, id_or_unk(token));
  }

  /// ln P(</s> | state).
  double end_score(const State& state) const {
    if (eos_ < 0) {
      throw ScoringError("model has no " + eos_symbol_ + " entry");
    }
    return score_ids(state.context, eos_);
  }

  /// ln P of a whole sentence: begin-of-sentence enters the history, every
  /// token is scored in turn, end-of-sentence is scored last.
  double score_sequence(std::span<const std::string> sequence) const {
    State state = begin_state();
    double total = 0.0;
    for (const std::string& token : sequence) {
      total += score_next(state, token);
    }
    return total + end_score(state);
  }

  friend bool operator==(const NGramModel& a, const NGramModel& b) {
    return a.order_ == b.order_ && a.id_to_token_ == b.id_to_token_ &&
           a.entries_equal(b);
  }

  friend NGramModel parse_arpa(std::istream& in, const std::string& context);
  friend std::string serialize_arpa(const NGramModel& model);

 private:
  using Table = std::unordered_map<std::vector<std::int32_t>, Entry,
                                   detail::NgramKeyHash>;

  bool entries_equal(const NGramModel& other) const {
    if (tables_.size() != other.tables_.size()) return false;
    for (std::size_t i = 0; i < tables_.size(); ++i) {
      if (tables_[i].size() != other.tables_[i].size()) return false;
      for (const auto& [key, e] : tables_[i]) {
        auto it = other.tables_[i].find(key);
        if (it == other.tables_[i].end()) return false;
        const Entry& o = it->second;
        if (e.log10_prob != o.log10_prob || e.has_backoff != o.has_backoff ||
            (e.has_backoff && e.log10_backoff != o.log10_backoff)) {
          return false;
        }
      }
    }
    return true;
  }

  std::int32_t order_ = 0;
  std::vector<Table> tables_;  // tables_[n-1]: n-token tuples
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, std::int32_t> token_ids_;
  std::string bos_symbol_ = "<s>";
  std::string eos_symbol_ = "</s>";
  std::string unk_symbol_ = "<unk>";
  std::int32_t bos_ = -1;
  std::int32_t eos_ = -1;
  std::int32_t unk_ = -1;
};

/// Parses ARPA text: a \data\ header with per-order counts, per-order
/// \n-grams: sections of "logprob tokens... [backoff]" lines, and a closing
/// \end\. Counts must match the sections exactly, and every n-gram's history
/// must itself be listed one order down (well-formed backoff chain).
inline NGramModel parse_arpa(std::istream& in,
                             const std::string& context = "<arpa>") {
  NGramModel model;
  std::string raw;
  std::size_t lineno = 0;

  auto next_line = [&](std::string& line) -> bool {
    while (std::getline(in, raw)) {
      ++lineno;
      std::size_t end = raw.find_last_not_of(" \t\r");
      raw.erase(end == std::string::npos ? 0 : end + 1);
      line = raw;
      return true;
    }
    return false;
  };
  auto is_blank = [](const std::string& s) {
    return s.find_first_not_of(" \t") == std::string::npos;
  };

  std::string line;
  // Header.
  bool saw_data = false;
  while (next_line(line)) {
    if (is_blank(line)) continue;
    if (line == "\\data\\") {
      saw_data = true;
      break;
    }
    throw ParseError(context + ": expected \\data\\, got '" + line + "'",
                     lineno);
  }
  if (!saw_data) {
    throw ParseError(context + ": missing \\data\\ section", lineno);
  }

  std::vector<std::size_t> declared;  // declared[n-1] = count for order n
  bool at_marker = false;
  while (next_line(line)) {
    if (is_blank(line)) continue;
    if (line[0] == '\\') {
      at_marker = true;
      break;  // first \n-grams: marker
    }
    auto fields = detail::split_fields(line);
    std::size_t eq;
    if (fields.size() != 2 || fields[0] != "ngram" ||
        (eq = fields[1].find('=')) == std::string_view::npos) {
      throw ParseError(context + ": malformed count line '" + line + "'",
                       lineno);
    }
    int n = 0;
    std::size_t count = 0;
    auto ns = fields[1].substr(0, eq);
    auto cs = fields[1].substr(eq + 1);
    auto r1 = std::from_chars(ns.data(), ns.data() + ns.size(), n);
    auto r2 = std::from_chars(cs.data(), cs.data() + cs.size(), count);
    if (r1.ec != std::errc() || r2.ec != std::errc() || n < 1) {
      throw ParseError(context + ": malformed count line '" + line + "'",
                       lineno);
    }
    if (declared.size() < static_cast<std::size_t>(n)) declared.resize(n, 0);
    declared[n - 1] = count;
  }
  if (declared.empty()) {
    throw ParseError(context + ": \\data\\ declares no n-gram orders", lineno);
  }
  if (!at_marker) {
    throw ParseError(context + ": no n-gram sections follow \\data\\", lineno);
  }
  model.order_ = static_cast<std::int32_t>(declared.size());
  model.tables_.resize(declared.size());

  auto intern = [&](std::string_view token) {
    auto it = model.token_ids_.find(std::string(token));
    if (it != model.token_ids_.end()) return it->second;
    auto id = static_cast<std::int32_t>(model.id_to_token_.size());
    model.id_to_token_.emplace_back(token);
    model.token_ids_.emplace(std::string(token), id);
    return id;
  };

  // Sections. `line` currently holds a marker.
  bool saw_end = false;
  while (true) {
    if (line == "\\end\\") {
      saw_end = true;
      break;
    }
    int n = 0;
    auto body = std::string_view(line);
    std::size_t dash = body.find("-grams:");
    bool marker_ok = body.size() > 1 && body[0] == '\\' &&
                     dash != std::string_view::npos &&
                     dash + 7 == body.size();
    if (marker_ok) {
      auto ns = body.substr(1, dash - 1);
      auto r = std::from_chars(ns.data(), ns.data() + ns.size(), n);
      marker_ok = r.ec == std::errc() && r.ptr == ns.data() + ns.size();
    }
    if (!marker_ok) {
      throw ParseError(context + ": expected a \\n-grams: marker or \\end\\, "
                       "got '" + line + "'", lineno);
    }
    if (n < 1 || n > model.order_) {
      throw ParseError(context + ": section \\" + std::to_string(n) +
                       "-grams: not declared in \\data\\", lineno);
    }

    NGramModel::Table& table = model.tables_[n - 1];
    bool more = false;
    while ((more = next_line(line))) {
      if (is_blank(line)) continue;
      if (line[0] == '\\') break;  // next marker
      auto fields = detail::split_fields(line);
      std::size_t want = static_cast<std::size_t>(n) + 1;
      if (fields.size() != want && fields.size() != want + 1) {
        throw ParseError(context + ": malformed " + std::to_string(n) +
                         "-gram line '" + line + "'", lineno);
      }
      auto prob = detail::parse_double(fields[0]);
      if (!prob) {
        throw ParseError(context + ": bad log-probability '" +
                         std::string(fields[0]) + "'", lineno);
      }
      NGramModel::Entry entry;
      entry.log10_prob = *prob;
      if (fields.size() == want + 1) {
        auto bow = detail::parse_double(fields.back());
        if (!bow) {
          throw ParseError(context + ": bad backoff weight '" +
                           std::string(fields.back()) + "'", lineno);
        }
        entry.log10_backoff = *bow;
        entry.has_backoff = true;
      }
      std::vector<std::int32_t> key;
      key.reserve(n);
      for (int i = 0; i < n; ++i) {
        std::string_view token = fields[1 + i];
        if (n == 1) {
          key.push_back(intern(token));
        } else {
          auto it = model.token_ids_.find(std::string(token));
          if (it == model.token_ids_.end()) {
            throw ParseError(context + ": token '" + std::string(token) +
                             "' in a " + std::to_string(n) +
                             "-gram has no unigram entry", lineno);
          }
          key.push_back(it->second);
        }
      }
      if (!table.emplace(std::move(key), entry).second) {
        throw ParseError(context + ": duplicate " + std::to_string(n) +
                         "-gram '" + line + "'", lineno);
      }
    }
    if (!more) {
      throw ParseError(context + ": missing \\end\\", lineno);
    }
  }
  if (!saw_end) {
    throw ParseError(context + ": missing \\end\\", lineno);
  }

  for (std::int32_t n = 1; n <= model.order_; ++n) {
    if (model.tables_[n - 1].size() != declared[n - 1]) {
      throw ParseError(
          context + ": \\" + std::to_string(n) + "-grams: section has " +
              std::to_string(model.tables_[n - 1].size()) +
              " entries, header declared " + std::to_string(declared[n - 1]),
          lineno);
    }
  }
  // Well-formed backoff chain: every history is listed one order down.
  for (std::int32_t n = 2; n <= model.order_; ++n) {
    for (const auto& [key, entry] : model.tables_[n - 1]) {
      std::vector<std::int32_t> hist(key.begin(), key.end() - 1);
      if (model.tables_[n - 2].find(hist) == model.tables_[n - 2].end()) {
        throw ParseError(context + ": " + std::to_string(n) +
                         "-gram history missing from the " +
                         std::to_string(n - 1) + "-gram table", lineno);
      }
    }
  }

  if (auto id = model.token_id(model.bos_symbol_)) model.bos_ = *id;
  if (auto id = model.token_id(model.eos_symbol_)) model.eos_ = *id;
  if (auto id = model.token_id(model.unk_symbol_)) model.unk_ = *id;
  return model;
}

inline NGramModel parse_arpa_string(const std::string& text,
                                    const std::string& context = "<arpa>") {
  std::istringstream in(text);
  return parse_arpa(in, context);
}

/// Reads an ARPA file; gzip-compressed input is accepted transparently.
inline NGramModel load_arpa(const std::filesystem::path& path) {
#if defined(CTCDEC_USE_ZLIB)
  gzFile gz = gzopen(path.string().c_str(), "rb");
  if (gz == nullptr) {
    throw FormatError("cannot open " + path.string());
  }
  std::string text;
  std::array<char, 1 << 16> buf;
  int got = 0;
  while ((got = gzread(gz, buf.data(), buf.size())) > 0) {
    text.append(buf.data(), static_cast<std::size_t>(got));
  }
  bool ok = got == 0;
  gzclose(gz);
  if (!ok) {
    throw FormatError("read error in " + path.string());
  }
  std::istringstream in(text);
  return parse_arpa(in, path.string());
#else
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open " + path.string());
  }
  int c0 = in.get(), c1 = in.get();
  if (c0 == 0x1f && c1 == 0x8b) {
    throw FormatError(path.string() +
                      " is gzip-compressed but zlib support is not built");
  }
  in.seekg(0);
  return parse_arpa(in, path.string());
#endif
}

/// ARPA text for a parsed model; entries sorted by token ids so output is
/// deterministic, values printed with shortest round-trip precision.
inline std::string serialize_arpa(const NGramModel& model) {
  auto format_value = [](double v) {
    std::array<char, 32> buf;
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
  };
  std::string out = "\\data\\\n";
  for (std::int32_t n = 1; n <= model.order_; ++n) {
    out += "ngram " + std::to_string(n) + "=" +
           std::to_string(model.tables_[n - 1].size()) + "\n";
  }
  for (std::int32_t n = 1; n <= model.order_; ++n) {
    out += "\n\\" + std::to_string(n) + "-grams:\n";
    std::vector<const std::vector<std::int32_t>*> keys;
    keys.reserve(model.tables_[n - 1].size());
    for (const auto& [key, entry] : model.tables_[n - 1]) {
      keys.push_back(&key);
    }
    std::sort(keys.begin(), keys.end(),
              [](const auto* a, const auto* b) { return *a < *b; });
    for (const auto* key : keys) {
      const NGramModel::Entry& e = model.tables_[n - 1].at(*key);
      out += format_value(e.log10_prob);
      for (std::int32_t id : *key) {
        out += '\t';
        out += model.id_to_token_[id];
      }
      if (e.has_backoff) {
        out += '\t';
        out += format_value(e.log10_backoff);
      }
      out += '\n';
    }
  }
  out += "\n\\end\\\n";
  return out;
}

}  // namespace ctcdec

#endif  // CTCDEC_NGRAM_HPP_
