#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "ctcdec/corpus.hpp"
#include "ctcdec/lpm_io.hpp"
#include "ctcdec/ngram.hpp"

using namespace ctcdec;

namespace {

const std::string kFixtures = CTCDEC_TEST_FIXTURES;

struct ToyCorpus {
  Vocabulary vocabulary{{"<blank>", "a", "b", "c", "d"}, 0};
  ToyConvModel model{5, 6, 5, 2};
  std::vector<std::pair<std::string, FeatureSequence>> utterances;

  explicit ToyCorpus(std::size_t count = 6, std::size_t frames = 24) {
    char name[16];
    for (std::size_t i = 0; i < count; ++i) {
      std::snprintf(name, sizeof(name), "u%02zu", i);
      utterances.emplace_back(name, synth_features(5, name, frames, 6));
    }
  }
};

CorpusOptions base_options(DecodeMode mode) {
  CorpusOptions options;
  options.mode = mode;
  options.decode.beam_size = 8;
  options.equal_partitions = 4;
  return options;
}

}  // namespace

TEST_CASE("mode parsing round-trips") {
  for (const char* name : {"baseline", "sf", "ilme", "ilme+sf"}) {
    CHECK(to_string(parse_decode_mode(name)) == name);
  }
  CHECK_THROWS_AS(parse_decode_mode("turbo"), ConfigError);
  CHECK(mode_uses_ilme(DecodeMode::kIlme));
  CHECK(mode_uses_lm(DecodeMode::kIlmeShallowFusion));
  CHECK(!mode_uses_lm(DecodeMode::kIlme));
}

TEST_CASE("fusion modes require an LM") {
  ToyCorpus corpus;
  CHECK_THROWS_AS(decode_corpus(corpus.model, corpus.utterances,
                                corpus.vocabulary, nullptr,
                                base_options(DecodeMode::kShallowFusion)),
                  ConfigError);
}

TEST_CASE("ilme with lambda 0 decodes identically to baseline") {
  ToyCorpus corpus;
  CorpusOptions baseline = base_options(DecodeMode::kBaseline);
  CorpusOptions ilme = base_options(DecodeMode::kIlme);
  ilme.ilm.lambda_ilm = 0.0;
  CorpusResult a = decode_corpus(corpus.model, corpus.utterances,
                                 corpus.vocabulary, nullptr, baseline);
  CorpusResult b = decode_corpus(corpus.model, corpus.utterances,
                                 corpus.vocabulary, nullptr, ilme);
  CHECK(format_transcripts(a) == format_transcripts(b));
  CHECK(format_nbest(a, corpus.vocabulary) ==
        format_nbest(b, corpus.vocabulary));
}

TEST_CASE("sf with lambda_lm 0 decodes identically to baseline") {
  ToyCorpus corpus;
  NGramModel lm = load_arpa(kFixtures + "/fusion_bigram.arpa");
  // The LM lacks token 'd'; it has no <unk>, so restrict the vocabulary.
  Vocabulary vocabulary({"<blank>", "a", "b", "c"}, 0);
  ToyConvModel model(5, 6, 4, 2);
  std::vector<std::pair<std::string, FeatureSequence>> utts(
      corpus.utterances);
  CorpusOptions baseline = base_options(DecodeMode::kBaseline);
  CorpusOptions sf = base_options(DecodeMode::kShallowFusion);
  sf.decode.lambda_lm = 0.0;
  CorpusResult a = decode_corpus(model, utts, vocabulary, nullptr, baseline);
  CorpusResult b = decode_corpus(model, utts, vocabulary, &lm, sf);
  CHECK(format_transcripts(a) == format_transcripts(b));
}

TEST_CASE("worker count never changes the outputs") {
  ToyCorpus corpus(10);
  NGramModel lm = load_arpa(kFixtures + "/biased_unigram.arpa");
  Vocabulary vocabulary({"<blank>", "a", "b"}, 0);
  ToyConvModel model(9, 6, 3, 2);
  for (DecodeMode mode : {DecodeMode::kBaseline, DecodeMode::kIlme,
                          DecodeMode::kIlmeShallowFusion}) {
    CorpusOptions options = base_options(mode);
    options.workers = 1;
    CorpusResult serial = decode_corpus(model, corpus.utterances, vocabulary,
                                        &lm, options);
    options.workers = 8;
    CorpusResult parallel = decode_corpus(model, corpus.utterances,
                                          vocabulary, &lm, options);
    CHECK(format_transcripts(serial) == format_transcripts(parallel));
    CHECK(format_nbest(serial, vocabulary) ==
          format_nbest(parallel, vocabulary));
    for (std::size_t i = 0; i < serial.utterances.size(); ++i) {
      CHECK(serial.utterances[i].diagnostics ==
            parallel.utterances[i].diagnostics);
    }
  }
}

TEST_CASE("file-backed corpus decodes and records per-utterance failures") {
  auto dir = std::filesystem::temp_directory_path() / "ctcdec_corpus_files";
  std::filesystem::create_directories(dir);
  Vocabulary vocabulary({"<blank>", "a", "b", "c", "d"}, 0);
  ToyConvModel model(5, 6, 5, 2);
  MaskPlan plan = plan_equal(24, 4);

  LpmManifest manifest;
  std::vector<std::string> ids;
  for (int i = 0; i < 3; ++i) {
    std::string id = "f" + std::to_string(i);
    ids.push_back(id);
    FeatureSequence features = synth_features(5, id, 24, 6);
    auto orig = dir / (id + ".orig.lpm");
    store_lpm(model.score(features), orig);
    manifest[id][kOriginalMask] = orig;
    for (std::size_t k = 0; k < plan.mask_count(); ++k) {
      auto path = dir / (id + ".m" + std::to_string(k) + ".lpm");
      // f2 is sabotaged: drop its last masked matrix from disk.
      if (!(id == "f2" && k == plan.mask_count() - 1)) {
        store_lpm(model.score(apply_mask(features, plan, k)), path);
      }
      manifest[id][static_cast<std::int32_t>(k)] = path;
    }
  }
  FileScorer files(manifest);

  CorpusOptions options = base_options(DecodeMode::kIlme);
  CorpusResult result = decode_corpus(files, ids, vocabulary, nullptr,
                                      options);
  CHECK(result.failures == 1);
  CHECK(result.utterances[0].ok());
  CHECK(result.utterances[1].ok());
  CHECK(!result.utterances[2].ok());
  CHECK(!result.utterances[2].error.empty());
  CHECK(format_errors(result).find("f2\t") == 0);
  // Successful utterances carry diagnostics and hypotheses.
  CHECK(!result.utterances[0].diagnostics.empty());
  CHECK(!result.utterances[0].nbest.empty());

  // The file route agrees with the feature route on the same model (the
  // LPM container rounds to float32; re-decoding from files must match the
  // float32-rounded in-memory pipeline only in its decoded tokens).
  CorpusOptions baseline = base_options(DecodeMode::kBaseline);
  std::vector<std::pair<std::string, FeatureSequence>> utts;
  for (const std::string& id : ids) {
    utts.emplace_back(id, synth_features(5, id, 24, 6));
  }
  CorpusResult from_files = decode_corpus(files, ids, vocabulary, nullptr,
                                          baseline);
  CorpusResult from_features = decode_corpus(model, utts, vocabulary, nullptr,
                                             baseline);
  CHECK(format_transcripts(from_files) == format_transcripts(from_features));
  std::filesystem::remove_all(dir);
}

TEST_CASE("transcripts parse back") {
  auto path = std::filesystem::temp_directory_path() / "ctcdec_trans.txt";
  {
    std::ofstream out(path);
    out << "u1\thello there\n";
    out << "u2\t\n";
  }
  auto map = load_transcripts(path);
  CHECK(map.size() == 2);
  CHECK(map["u1"] == "hello there");
  CHECK(map["u2"].empty());
  std::filesystem::remove(path);
}
