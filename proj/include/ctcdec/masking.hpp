// ctcdec/masking.hpp

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

#ifndef CTCDEC_MASKING_HPP_
#define CTCDEC_MASKING_HPP_

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ctcdec/errors.hpp"
#include "ctcdec/matrix.hpp"

namespace ctcdec {

/// K disjoint half-open frame ranges covering [0, T) exactly, ordered by
/// start. Range k is the stretch zeroed out by masked variant k.
struct MaskPlan {
  struct Range {
    std::size_t begin;
    std::size_t end;  // exclusive
    friend bool operator==(const Range&, const Range&) = default;
  };

  std::size_t frame_count = 0;
  std::vector<Range> ranges;

  std::size_t mask_count() const { return ranges.size(); }
};

/// Equal partitioning: range k = [floor(kT/K), floor((k+1)T/K)). Half-open
/// floor boundaries so the union covers every frame even when K does not
/// divide T. Requires 1 <= K <= T.
inline MaskPlan plan_equal(std::size_t frames, std::size_t partitions) {
  if (partitions == 0 || partitions > frames) {
    throw UsageError("plan_equal: need 1 <= K <= T, got K = " +
                     std::to_string(partitions) + ", T = " +
                     std::to_string(frames));
  }
  MaskPlan plan;
  plan.frame_count = frames;
  plan.ranges.reserve(partitions);
  for (std::size_t k = 0; k < partitions; ++k) {
    std::size_t begin = k * frames / partitions;
    std::size_t end = (k + 1) * frames / partitions;
    plan.ranges.push_back({begin, end});
  }
  return plan;
}

/// Partitioning at externally supplied boundaries (e.g. word boundaries from
/// a forced alignment). Boundaries must be strictly increasing interior
/// frame indices; the ranges are [0, b_1), [b_1, b_2), ..., [b_last, T).
inline MaskPlan plan_segments(std::size_t frames,
                              std::span<const std::size_t> boundaries) {
  if (frames == 0) {
    throw UsageError("plan_segments: T must be positive");
  }
  MaskPlan plan;
  plan.frame_count = frames;
  std::size_t prev = 0;
  for (std::size_t b : boundaries) {
    if (b <= prev || b >= frames) {
      throw UsageError("plan_segments: boundary " + std::to_string(b) +
                       " not strictly increasing inside (0, " +
                       std::to_string(frames) + ")");
    }
    plan.ranges.push_back({prev, b});
    prev = b;
  }
  plan.ranges.push_back({prev, frames});
  return plan;
}

/// Masked variant k: frames in range k become all-zero vectors, every other
/// frame is copied bit-identically.
inline FeatureSequence apply_mask(const FeatureSequence& features,
                                  const MaskPlan& plan,
                                  std::size_t mask_index) {
  if (mask_index >= plan.mask_count()) {
    throw UsageError("apply_mask: mask index " + std::to_string(mask_index) +
                     " out of range for K = " +
                     std::to_string(plan.mask_count()));
  }
  if (plan.frame_count != features.rows()) {
    throw UsageError("apply_mask: plan covers " +
                     std::to_string(plan.frame_count) +
                     " frames but input has " +
                     std::to_string(features.rows()));
  }
  FeatureSequence out = features;
  const MaskPlan::Range& r = plan.ranges[mask_index];
  for (std::size_t t = r.begin; t < r.end; ++t) {
    for (double& v : out.row(t)) v = 0.0;
  }
  return out;
}

/// Segment-boundary file: one utterance per line,
/// "utterance-id<TAB>comma-separated frame indices". An empty index list
/// yields a single all-covering mask.
inline std::map<std::string, std::vector<std::size_t>> load_segment_boundaries(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw FormatError("cannot open segment file " + path.string());
  }
  std::map<std::string, std::vector<std::size_t>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw ParseError(path.string() + ": expected 'utt<TAB>indices'", lineno);
    }
    std::string utt = line.substr(0, tab);
    std::vector<std::size_t> boundaries;
    std::size_t pos = tab + 1;
    while (pos <= line.size()) {
      std::size_t comma = line.find(',', pos);
      std::string field = line.substr(
          pos, comma == std::string::npos ? std::string::npos : comma - pos);
      if (!field.empty()) {
        try {
          boundaries.push_back(std::stoull(field));
        } catch (const std::exception&) {
          throw ParseError(path.string() + ": bad frame index '" + field + "'",
                           lineno);
        }
      }
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    out[utt] = std::move(boundaries);
  }
  return out;
}

}  // namespace ctcdec

#endif  // CTCDEC_MASKING_HPP_
