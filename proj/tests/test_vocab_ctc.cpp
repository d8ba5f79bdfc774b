#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ctcdec/ctc.hpp"
#include "ctcdec/prng.hpp"
#include "ctcdec/vocabulary.hpp"

using namespace ctcdec;

namespace {
const std::int32_t kBlank = 0;
Vocabulary abc_vocab() {
  return Vocabulary({"<blank>", "a", "b", "c"}, kBlank);
}
}  // namespace

TEST_CASE("vocabulary enforces its invariants") {
  CHECK_THROWS_AS(Vocabulary({"x"}, 0), UsageError);
  CHECK_THROWS_AS(Vocabulary({"x", "y"}, 2), UsageError);
  CHECK_THROWS_AS(Vocabulary({"x", "y"}, -1), UsageError);
  CHECK_THROWS_AS(Vocabulary({"x", "x"}, 0), UsageError);
}

TEST_CASE("vocabulary lookup and word-start marker") {
  Vocabulary v({"<blank>", "▁he", "ll", "▁o"}, 0, "▁");
  CHECK(v.size() == 4);
  CHECK(v.find("ll").value() == 2);
  CHECK(!v.find("zz").has_value());
  CHECK(v.is_word_start(1));
  CHECK(!v.is_word_start(2));
  CHECK(v.piece(1) == "he");
  std::vector<std::int32_t> ids{1, 2, 3};
  CHECK(v.detokenize(ids) == "hell o");
  auto words = v.words(ids);
  REQUIRE(words.size() == 2);
  CHECK(words[0] == "hell");
  CHECK(words[1] == "o");
  // Leading continuation token still opens the first word.
  std::vector<std::int32_t> leading{2, 3};
  CHECK(v.detokenize(leading) == "ll o");
}

TEST_CASE("vocabulary without a marker joins tokens with spaces") {
  Vocabulary v = abc_vocab();
  std::vector<std::int32_t> ids{1, 3, 2};
  CHECK(v.detokenize(ids) == "a c b");
}

TEST_CASE("vocabulary file loading, one token per line") {
  auto path = std::filesystem::temp_directory_path() / "ctcdec_vocab.txt";
  {
    std::ofstream out(path);
    out << "<blank>\na\nb\n";
  }
  Vocabulary v = Vocabulary::load(path, 0);
  CHECK(v.size() == 3);
  CHECK(v.token(2) == "b");
  std::filesystem::remove(path);
}

TEST_CASE("collapse_ctc drops repeats then blanks") {
  // [a, a, blank, b] -> [a, b]
  std::vector<std::int32_t> path{1, 1, kBlank, 2};
  CHECK(collapse_ctc(path, kBlank, 4) == std::vector<std::int32_t>{1, 2});
  // all-blank path -> []
  path = {kBlank, kBlank};
  CHECK(collapse_ctc(path, kBlank, 4).empty());
  // blank separates a genuine repeat: [a, blank, a] -> [a, a]
  path = {1, kBlank, 1};
  CHECK(collapse_ctc(path, kBlank, 4) == std::vector<std::int32_t>{1, 1});
}

TEST_CASE("collapse_ctc rejects out-of-range indices") {
  std::vector<std::int32_t> path{1, 4};
  CHECK_THROWS_AS(collapse_ctc(path, kBlank, 4), UsageError);
  path = {-1};
  CHECK_THROWS_AS(collapse_ctc(path, kBlank, 4), UsageError);
}

TEST_CASE("collapse_ctc is invariant under element duplication") {
  SplitMix64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t len = 1 + rng.next_below(12);
    std::vector<std::int32_t> path(len);
    for (auto& id : path) {
      id = static_cast<std::int32_t>(rng.next_below(4));
    }
    std::vector<std::int32_t> duplicated;
    for (std::int32_t id : path) {
      std::size_t copies = 1 + rng.next_below(3);
      duplicated.insert(duplicated.end(), copies, id);
    }
    CHECK(collapse_ctc(duplicated, kBlank, 4) ==
          collapse_ctc(path, kBlank, 4));
  }
}
