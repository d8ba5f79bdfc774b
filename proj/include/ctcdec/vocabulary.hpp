// ctcdec/vocabulary.hpp

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

#ifndef CTCDEC_VOCABULARY_HPP_
#define CTCDEC_VOCABULARY_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ctcdec/errors.hpp"

namespace ctcdec {

/// The token inventory of a CTC model: N unique token strings, the index of
/// the blank token, and an optional subword word-start marker (tokens whose
/// text begins with the marker open a new word when detokenizing).
class Vocabulary {
 public:
  Vocabulary(std::vector<std::string> tokens, std::int32_t blank_index,
             std::string word_start_marker = "")
      : tokens_(std::move(tokens)),
        blank_(blank_index),
        marker_(std::move(word_start_marker)) {
    if (tokens_.size() < 2) {
      throw UsageError("vocabulary needs blank plus at least one token");
    }
    if (blank_ < 0 || static_cast<std::size_t>(blank_) >= tokens_.size()) {
      throw UsageError("blank index " + std::to_string(blank_) +
                       " out of range for vocabulary of size " +
                       std::to_string(tokens_.size()));
    }
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      auto [it, inserted] =
          index_.emplace(tokens_[i], static_cast<std::int32_t>(i));
      if (!inserted) {
        throw UsageError("duplicate token '" + tokens_[i] + "' at index " +
                         std::to_string(i));
      }
    }
  }

  /// One token per line; line number = token index. Blank index and marker
  /// come from the run configuration, not the file.
  static Vocabulary load(const std::filesystem::path& path,
                         std::int32_t blank_index,
                         std::string word_start_marker = "") {
    std::ifstream in(path);
    if (!in) {
      throw FormatError("cannot open vocabulary file " + path.string());
    }
    std::vector<std::string> tokens;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) {
        throw ParseError(path.string() + ": empty token", lineno);
      }
      tokens.push_back(line);
    }
    return Vocabulary(std::move(tokens), blank_index,
                      std::move(word_start_marker));
  }

  std::int32_t size() const { return static_cast<std::int32_t>(tokens_.size()); }
  std::int32_t blank_index() const { return blank_; }
  const std::string& token(std::int32_t id) const { return tokens_[id]; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& word_start_marker() const { return marker_; }

  std::optional<std::int32_t> find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? std::nullopt
                              : std::optional<std::int32_t>(it->second);
  }

  bool is_word_start(std::int32_t id) const {
    return !marker_.empty() && tokens_[id].starts_with(marker_);
  }

  /// Marker-stripped text of one token.
  std::string piece(std::int32_t id) const {
    const std::string& t = tokens_[id];
    return is_word_start(id) ? t.substr(marker_.size()) : t;
  }

  /// Groups a blank-free token sequence into words. With a marker, each
  /// marked token opens a word; leading unmarked tokens open the first one.
  /// Without a marker every token is its own word.
  std::vector<std::string> words(std::span<const std::int32_t> ids) const {
    std::vector<std::string> out;
    for (std::int32_t id : ids) {
      if (marker_.empty() || is_word_start(id) || out.empty()) {
        out.push_back(piece(id));
      } else {
        out.back() += piece(id);
      }
    }
    return out;
  }

  /// Space-joined words().
  std::string detokenize(std::span<const std::int32_t> ids) const {
    std::string out;
    for (const std::string& w : words(ids)) {
      if (!out.empty()) out += ' ';
      out += w;
    }
    return out;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
  std::int32_t blank_;
  std::string marker_;
};

}  // namespace ctcdec

#endif  // CTCDEC_VOCABULARY_HPP_
