// tools/ctcdec_main.cpp

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

// Command-line front end: decode, eval, lm-score, mask-plan, make-toy,
// ilm-diagnose. Exit codes: 0 success, 1 runtime failure, 2 validation
// failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ctcdec/acoustic.hpp"
#include "ctcdec/corpus.hpp"
#include "ctcdec/decoder.hpp"
#include "ctcdec/errors.hpp"
#include "ctcdec/eval.hpp"
#include "ctcdec/ilme.hpp"
#include "ctcdec/lpm_io.hpp"
#include "ctcdec/masking.hpp"
#include "ctcdec/ngram.hpp"
#include "ctcdec/prng.hpp"
#include "ctcdec/vocabulary.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ctcdec::ConfigError("cannot open " + path.string());
  }
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ctcdec::ConfigError("cannot open " + path.string() +
                              " for writing");
  }
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_hash(const fs::path& path) {
  return "fnv1a64:" + hex64(ctcdec::fnv1a64(read_file(path)));
}

std::size_t default_workers() {
  if (const char* env = std::getenv("CTCDEC_WORKERS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  return 1;
}

// ---------------------------------------------------------------------------
// decode

struct DecodeArgs {
  std::string manifest;
  std::string vocab;
  std::string lm;
  std::string segments;
  std::string out_dir;
  std::string mode = "baseline";
  std::string scorer = "file";
  std::string lm_mode = "token";
  std::string marker;
  std::int32_t blank_index = 0;
  std::size_t masks = 5;
  std::int32_t beam = 50;
  double lambda_lm = 1.0;
  double lambda_ilm = 0.1;
  double gamma = 0.25;
  double beta = 0.9;
  double insertion_bonus = 0.0;
  double prune_threshold = std::numeric_limits<double>::infinity();
  bool sequential_scoring = false;
  std::size_t nbest = 10;
  std::size_t workers = default_workers();
  std::uint64_t toy_seed = 7;
  std::int32_t toy_dim = 16;
  std::int32_t toy_radius = 2;
  std::int32_t toy_hidden = 16;
  std::size_t toy_frames = 40;
  std::size_t toy_utts = 0;
};

void add_decode_options(CLI::App* cmd, DecodeArgs& args) {
  cmd->add_option("--manifest", args.manifest,
                  "utt<TAB>mask<TAB>path bindings (scorer=file)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--vocab", args.vocab, "token list, one per line")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--lm", args.lm, "ARPA LM for shallow fusion (.gz ok)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--segments", args.segments,
                  "per-utterance mask boundaries (word-boundary masking)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out_dir, "output directory")->required();
  cmd->add_option("--mode", args.mode, "baseline | sf | ilme | ilme+sf");
  cmd->add_option("--scorer", args.scorer, "file | toy");
  cmd->add_option("--lm-mode", args.lm_mode,
                  "fusion granularity: token | word");
  cmd->add_option("--word-start-marker", args.marker,
                  "subword prefix that opens a new word");
  cmd->add_option("--blank-index", args.blank_index, "CTC blank token index");
  cmd->add_option("--masks", args.masks, "equal partition count K");
  cmd->add_option("--beam", args.beam, "beam size");
  cmd->add_option("--lambda-lm", args.lambda_lm, "fusion LM weight");
  cmd->add_option("--lambda-ilm", args.lambda_ilm, "ILM subtraction weight");
  cmd->add_option("--gamma", args.gamma, "normalized-delta threshold");
  cmd->add_option("--beta", args.beta, "blank posterior gate");
  cmd->add_option("--insertion-bonus", args.insertion_bonus,
                  "per-token score bonus");
  cmd->add_option("--prune-threshold", args.prune_threshold,
                  "skip tokens below best-of-frame minus this");
  cmd->add_flag("--sequential-scoring", args.sequential_scoring,
                "score masks one by one instead of one K+1 batch");
  cmd->add_option("--nbest", args.nbest, "hypotheses kept per utterance");
  cmd->add_option("--workers", args.workers,
                  "worker threads (env CTCDEC_WORKERS)");
  cmd->add_option("--toy-seed", args.toy_seed, "toy scorer seed");
  cmd->add_option("--toy-dim", args.toy_dim, "toy feature dimension");
  cmd->add_option("--toy-radius", args.toy_radius, "toy context radius");
  cmd->add_option("--toy-hidden", args.toy_hidden, "toy hidden units");
  cmd->add_option("--toy-frames", args.toy_frames,
                  "frames per synthetic utterance");
  cmd->add_option("--toy-utts", args.toy_utts,
                  "synthetic utterance count (scorer=toy without manifest)");
}

std::string resolved_config_text(const DecodeArgs& args,
                                 const std::string& extra) {
  std::ostringstream out;
  out << "# ctcdec run manifest\n";
  out << "version=" << kVersion << "\n";
  out << "mode=" << args.mode << "\n";
  out << "scorer=" << args.scorer << "\n";
  auto path_line = [&](const char* key, const std::string& value) {
    out << key << "=" << value;
    if (!value.empty()) out << "\thash=" << file_hash(value);
    out << "\n";
  };
  path_line("manifest", args.manifest);
  path_line("vocab", args.vocab);
  path_line("lm", args.lm);
  path_line("segments", args.segments);
  char buf[64];
  auto num = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%s=%.9g\n", key, v);
    out << buf;
  };
  out << "blank_index=" << args.blank_index << "\n";
  out << "word_start_marker=" << args.marker << "\n";
  out << "lm_mode=" << args.lm_mode << "\n";
  out << "masks=" << args.masks << "\n";
  out << "beam=" << args.beam << "\n";
  num("lambda_lm", args.lambda_lm);
  num("lambda_ilm", args.lambda_ilm);
  num("gamma", args.gamma);
  num("beta", args.beta);
  num("insertion_bonus", args.insertion_bonus);
  num("prune_threshold", args.prune_threshold);
  out << "sequential_scoring=" << (args.sequential_scoring ? 1 : 0) << "\n";
  out << "nbest=" << args.nbest << "\n";
  out << "workers=" << args.workers << "\n";
  if (args.scorer == "toy") {
    out << "toy_seed=" << args.toy_seed << "\n";
    out << "toy_dim=" << args.toy_dim << "\n";
    out << "toy_radius=" << args.toy_radius << "\n";
    out << "toy_hidden=" << args.toy_hidden << "\n";
    out << "toy_frames=" << args.toy_frames << "\n";
    out << "toy_utts=" << args.toy_utts << "\n";
  }
  out << extra;
  return out.str();
}

// Combined content hash over every LPM file a manifest references, in
// manifest order, so a run directory pins its actual inputs.
std::string manifest_content_hash(const ctcdec::LpmManifest& manifest) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [utt, entries] : manifest) {
    for (const auto& [mask, path] : entries) {
      try {
        h = ctcdec::fnv1a64(read_file(path), h);
      } catch (const std::exception&) {
        // Unreadable inputs surface as per-utterance decode failures; the
        // hash just records that the file was absent.
        h = ctcdec::fnv1a64("missing:" + path.string(), h);
      }
    }
  }
  return "fnv1a64:" + hex64(h);
}

int run_decode(const DecodeArgs& args) {
  ctcdec::CorpusOptions options;
  options.mode = ctcdec::parse_decode_mode(args.mode);
  options.ilm.gamma = args.gamma;
  options.ilm.beta = args.beta;
  options.ilm.lambda_ilm = args.lambda_ilm;
  options.ilm.batched_scoring = !args.sequential_scoring;
  options.ilm.validate();
  options.decode.beam_size = args.beam;
  options.decode.lambda_lm = args.lambda_lm;
  options.decode.token_insertion_bonus = args.insertion_bonus;
  options.decode.prune_log_threshold = args.prune_threshold;
  options.decode.validate();
  options.equal_partitions = args.masks;
  options.workers = args.workers;
  options.nbest = std::max<std::size_t>(1, args.nbest);
  if (args.lm_mode == "word") {
    options.decode.lm_granularity = ctcdec::LmGranularity::kWord;
  } else if (args.lm_mode != "token") {
    throw ctcdec::ConfigError("--lm-mode must be token or word");
  }
  if (args.masks < 1) {
    throw ctcdec::ConfigError("--masks must be >= 1");
  }
  if (args.scorer != "file" && args.scorer != "toy") {
    throw ctcdec::ConfigError("--scorer must be file or toy");
  }

  ctcdec::Vocabulary vocabulary =
      ctcdec::Vocabulary::load(args.vocab, args.blank_index, args.marker);

  std::optional<ctcdec::NGramModel> lm;
  if (ctcdec::mode_uses_lm(options.mode)) {
    if (args.lm.empty()) {
      throw ctcdec::ConfigError("--lm is required for mode '" + args.mode +
                                "'");
    }
  }
  if (!args.lm.empty()) {
    lm = ctcdec::load_arpa(args.lm);
  }

  std::map<std::string, std::vector<std::size_t>> segments;
  if (!args.segments.empty()) {
    segments = ctcdec::load_segment_boundaries(args.segments);
    options.segment_boundaries = &segments;
  }

  fs::create_directories(args.out_dir);
  ctcdec::CorpusResult result;
  std::string extra_manifest_lines;
  if (args.scorer == "file") {
    if (args.manifest.empty()) {
      throw ctcdec::ConfigError("--manifest is required for scorer 'file'");
    }
    ctcdec::FileScorer files =
        ctcdec::FileScorer::from_manifest_file(args.manifest);
    extra_manifest_lines =
        "lpm_content_hash=" + manifest_content_hash(files.manifest()) + "\n";
    std::vector<std::string> ids;
    for (const auto& [id, entries] : files.manifest()) ids.push_back(id);
    result = ctcdec::decode_corpus(files, ids, vocabulary,
                                   lm ? &*lm : nullptr, options);
  } else {
    ctcdec::ToyConvModel model(args.toy_seed, args.toy_dim, vocabulary.size(),
                               args.toy_radius, args.toy_hidden);
    std::vector<std::pair<std::string, ctcdec::FeatureSequence>> inputs;
    if (!args.manifest.empty()) {
      // Synthesize features for the manifest's utterance ids.
      for (const auto& [id, entries] :
           ctcdec::load_lpm_manifest(args.manifest)) {
        inputs.emplace_back(id, ctcdec::synth_features(args.toy_seed, id,
                                                       args.toy_frames,
                                                       args.toy_dim));
      }
    } else if (args.toy_utts > 0) {
      char name[32];
      for (std::size_t i = 0; i < args.toy_utts; ++i) {
        std::snprintf(name, sizeof(name), "utt%04zu", i);
        inputs.emplace_back(name, ctcdec::synth_features(args.toy_seed, name,
                                                         args.toy_frames,
                                                         args.toy_dim));
      }
    } else {
      throw ctcdec::ConfigError(
          "scorer 'toy' needs --manifest or --toy-utts");
    }
    result = ctcdec::decode_corpus(model, inputs, vocabulary,
                                   lm ? &*lm : nullptr, options);
  }

  fs::path out_dir(args.out_dir);
  write_file(out_dir / "transcripts.txt", ctcdec::format_transcripts(result));
  write_file(out_dir / "nbest.txt", ctcdec::format_nbest(result, vocabulary));
  write_file(out_dir / "errors.txt", ctcdec::format_errors(result));
  if (ctcdec::mode_uses_ilme(options.mode)) {
    std::string diag;
    for (const auto& r : result.utterances) {
      if (!r.ok()) continue;
      diag += "## utterance " + r.utterance_id + "\n";
      diag += r.diagnostics;
    }
    write_file(out_dir / "diagnostics.txt", diag);
  }
  write_file(out_dir / "run_manifest.txt",
             resolved_config_text(args, extra_manifest_lines));

  if (result.failures > 0) {
    std::fprintf(stderr, "ctcdec: %zu of %zu utterances failed\n",
                 result.failures, result.utterances.size());
    return kExitRuntime;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string ref;
  std::vector<std::string> hyps;  // LABEL=PATH
  std::string baseline;
  std::string oov_vocab;
  std::string oov_terms;
  std::string json_out;
  bool keep_case = false;
  bool keep_punct = false;
  bool per_utterance = false;
};

std::string lm_label_of(const std::string& method) {
  std::size_t plus = method.find('+');
  if (plus == std::string::npos) return "no LM";
  return method.substr(plus + 1) + " LM";
}

int run_eval(const EvalArgs& args) {
  ctcdec::TextNormalizer norm;
  norm.fold_case = !args.keep_case;
  norm.strip_punctuation = !args.keep_punct;

  auto tokenize = [&](const std::map<std::string, std::string>& texts) {
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& [id, text] : texts) out[id] = norm.words(text);
    return out;
  };
  auto refs = tokenize(ctcdec::load_transcripts(args.ref));

  std::set<std::string> terms;
  if (!args.oov_terms.empty()) {
    std::ifstream in(args.oov_terms);
    if (!in) {
      throw ctcdec::ConfigError("cannot open " + args.oov_terms);
    }
    std::string line;
    while (std::getline(in, line)) {
      for (const std::string& w : norm.words(line)) terms.insert(w);
    }
  } else if (!args.oov_vocab.empty()) {
    std::ifstream in(args.oov_vocab);
    if (!in) {
      throw ctcdec::ConfigError("cannot open " + args.oov_vocab);
    }
    std::unordered_set<std::string> train_words;
    std::string line;
    while (std::getline(in, line)) {
      for (const std::string& w : norm.words(line)) train_words.insert(w);
    }
    std::vector<std::vector<std::string>> ref_corpus;
    for (const auto& [id, words] : refs) ref_corpus.push_back(words);
    terms = ctcdec::mine_oov(ref_corpus, train_words);
  }

  std::vector<ctcdec::MethodEval> rows;
  for (const std::string& spec : args.hyps) {
    std::size_t eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ctcdec::ConfigError("--hyp expects LABEL=PATH, got '" + spec +
                                "'");
    }
    ctcdec::MethodEval row;
    row.method = spec.substr(0, eq);
    row.lm_label = lm_label_of(row.method);
    auto hyp_words = tokenize(ctcdec::load_transcripts(spec.substr(eq + 1)));
    row.corpus = ctcdec::evaluate_corpus(refs, hyp_words);
    if (!terms.empty()) {
      std::vector<std::pair<std::vector<std::string>,
                            std::vector<std::string>>> pairs;
      for (const auto& [id, ref_w] : refs) {
        auto it = hyp_words.find(id);
        pairs.emplace_back(ref_w, it == hyp_words.end()
                                      ? std::vector<std::string>{}
                                      : it->second);
      }
      row.oov = ctcdec::oov_f1(pairs, terms);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw ctcdec::ConfigError("--hyp is required at least once");
  }
  std::string baseline = args.baseline.empty() ? rows.front().method
                                               : args.baseline;
  ctcdec::compute_werr(rows, baseline);

  std::string table = ctcdec::format_eval_grid(rows, baseline);
  std::fputs(table.c_str(), stdout);
  if (args.per_utterance) {
    for (const ctcdec::MethodEval& row : rows) {
      std::printf("# per-utterance: %s\n", row.method.c_str());
      for (const auto& u : row.corpus.utterances) {
        std::printf("%s\tS=%zu D=%zu I=%zu R=%zu WER=%.3f\n",
                    u.utterance_id.c_str(), u.counts.substitutions,
                    u.counts.deletions, u.counts.insertions,
                    u.counts.reference_words, u.counts.wer());
      }
    }
  }

  if (!args.json_out.empty()) {
    json doc;
    doc["baseline"] = baseline;
    doc["oov_terms"] = std::vector<std::string>(terms.begin(), terms.end());
    doc["rows"] = json::array();
    for (const ctcdec::MethodEval& row : rows) {
      json r;
      r["method"] = row.method;
      r["lm"] = row.lm_label;
      r["wer"] = row.corpus.wer();
      r["werr"] = row.werr.value();
      r["substitutions"] = row.corpus.pooled.substitutions;
      r["deletions"] = row.corpus.pooled.deletions;
      r["insertions"] = row.corpus.pooled.insertions;
      r["reference_words"] = row.corpus.pooled.reference_words;
      if (row.oov) {
        r["oov_f1"] = row.oov->f1;
        r["oov_precision"] = row.oov->precision;
        r["oov_recall"] = row.oov->recall;
        if (args.per_utterance) {
          r["oov_per_term"] = json::object();
          for (const auto& [term, counts] : row.oov->per_term) {
            r["oov_per_term"][term] = {
                {"tp", counts.true_positives},
                {"hyp", counts.hypothesis_count},
                {"ref", counts.reference_count}};
          }
        }
      }
      if (args.per_utterance) {
        r["utterances"] = json::array();
        for (const auto& u : row.corpus.utterances) {
          r["utterances"].push_back({{"id", u.utterance_id},
                                     {"S", u.counts.substitutions},
                                     {"D", u.counts.deletions},
                                     {"I", u.counts.insertions},
                                     {"R", u.counts.reference_words},
                                     {"wer", u.counts.wer()}});
        }
      }
      doc["rows"].push_back(std::move(r));
    }
    write_file(args.json_out, doc.dump(2) + "\n");
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// lm-score

int run_lm_score(const std::string& lm_path, const std::string& text,
                 const std::string& text_file) {
  ctcdec::NGramModel model = ctcdec::load_arpa(lm_path);
  auto score_line = [&](const std::string& line) {
    std::vector<std::string> tokens;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    std::printf("%.6f\t%s\n", model.score_sequence(tokens), line.c_str());
  };
  if (!text.empty()) {
    score_line(text);
    return kExitOk;
  }
  std::istream* in = &std::cin;
  std::ifstream file;
  if (!text_file.empty()) {
    file.open(text_file);
    if (!file) {
      throw ctcdec::ConfigError("cannot open " + text_file);
    }
    in = &file;
  }
  std::string line;
  while (std::getline(*in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    score_line(line);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// mask-plan

int run_mask_plan(std::size_t frames, std::size_t partitions,
                  const std::string& boundaries_csv) {
  ctcdec::MaskPlan plan;
  if (!boundaries_csv.empty()) {
    std::vector<std::size_t> boundaries;
    std::istringstream in(boundaries_csv);
    std::string field;
    while (std::getline(in, field, ',')) {
      if (!field.empty()) boundaries.push_back(std::stoull(field));
    }
    plan = ctcdec::plan_segments(frames, boundaries);
  } else {
    plan = ctcdec::plan_equal(frames, partitions);
  }
  for (std::size_t k = 0; k < plan.mask_count(); ++k) {
    std::printf("%zu: [%zu, %zu)\n", k, plan.ranges[k].begin,
                plan.ranges[k].end);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// make-toy

struct MakeToyArgs {
  std::string out_dir;
  std::uint64_t seed = 29;
  std::size_t utts = 20;
  std::size_t frames = 40;
  std::int32_t dim = 16;
  std::int32_t vocab_size = 12;
  std::size_t masks = 5;
  std::int32_t radius = 2;
  std::int32_t hidden = 16;
};

std::vector<std::string> toy_tokens(std::int32_t size) {
  std::vector<std::string> base{"<blank>", "\u2581the", "\u2581a",
                                "\u2581cat", "\u2581dog", "\u2581bird", "s",
                                "\u2581ran", "\u2581sat", "ing", "\u2581big",
                                "\u2581red"};
  std::vector<std::string> tokens;
  for (std::int32_t i = 0; i < size; ++i) {
    if (static_cast<std::size_t>(i) < base.size()) {
      tokens.push_back(base[i]);
    } else {
      tokens.push_back("\u2581w" + std::to_string(i));
    }
  }
  return tokens;
}

// Unigram ARPA over the vocabulary's non-blank tokens plus </s>, from
// add-one-smoothed counts. Exact text so fixture LMs are deterministic.
std::string unigram_arpa(const std::vector<std::string>& symbols,
                         const std::map<std::string, std::size_t>& counts) {
  double total = 0.0;
  for (const std::string& s : symbols) {
    auto it = counts.find(s);
    total += 1.0 + (it == counts.end() ? 0.0 : static_cast<double>(it->second));
  }
  std::ostringstream out;
  out << "\\data\\\n";
  out << "ngram 1=" << symbols.size() + 1 << "\n\n";
  out << "\\1-grams:\n";
  out << "-99\t<s>\n";
  char buf[64];
  for (const std::string& s : symbols) {
    auto it = counts.find(s);
    double c = 1.0 + (it == counts.end() ? 0.0 : static_cast<double>(it->second));
    std::snprintf(buf, sizeof(buf), "%.10f", std::log10(c / total));
    out << buf << "\t" << s << "\n";
  }
  out << "\n\\end\\\n";
  return out.str();
}

int run_make_toy(const MakeToyArgs& args) {
  if (args.vocab_size < 4) {
    throw ctcdec::ConfigError("--vocab-size must be >= 4");
  }
  if (args.masks < 1 || args.masks > args.frames) {
    throw ctcdec::ConfigError("--masks must lie in [1, frames]");
  }
  fs::path out_dir(args.out_dir);
  fs::create_directories(out_dir / "lpm");

  std::vector<std::string> tokens = toy_tokens(args.vocab_size);
  {
    std::string text;
    for (const std::string& t : tokens) text += t + "\n";
    write_file(out_dir / "vocab.txt", text);
  }
  ctcdec::Vocabulary vocabulary(tokens, 0, "\u2581");
  ctcdec::ToyConvModel model(args.seed, args.dim, vocabulary.size(),
                             args.radius, args.hidden);
  ctcdec::MaskPlan plan = ctcdec::plan_equal(args.frames, args.masks);

  std::string manifest, refs;
  std::map<std::string, std::size_t> token_counts;
  char name[32], rel[64];
  for (std::size_t i = 0; i < args.utts; ++i) {
    std::snprintf(name, sizeof(name), "utt%04zu", i);
    ctcdec::FeatureSequence features =
        ctcdec::synth_features(args.seed, name, args.frames, args.dim);
    ctcdec::LogPosteriorMatrix original = model.score(features);
    std::snprintf(rel, sizeof(rel), "lpm/%s.orig.lpm", name);
    ctcdec::store_lpm(original, out_dir / rel);
    manifest += std::string(name) + "\t-1\t" + rel + "\n";
    for (std::size_t k = 0; k < args.masks; ++k) {
      ctcdec::LogPosteriorMatrix masked =
          model.score(ctcdec::apply_mask(features, plan, k));
      std::snprintf(rel, sizeof(rel), "lpm/%s.mask%zu.lpm", name, k);
      ctcdec::store_lpm(masked, out_dir / rel);
      manifest += std::string(name) + "\t" + std::to_string(k) + "\t" + rel +
                  "\n";
    }
    ctcdec::Hypothesis greedy = ctcdec::greedy_decode(original, vocabulary);
    refs += std::string(name) + "\t" + vocabulary.detokenize(greedy.tokens) +
            "\n";
    for (std::int32_t id : greedy.tokens) {
      ++token_counts[vocabulary.token(id)];
    }
  }
  write_file(out_dir / "manifest.tsv", manifest);
  write_file(out_dir / "ref.txt", refs);

  // Fixture LMs over the decoder's token vocabulary: a flat source LM and a
  // target LM tilted toward the reference token frequencies.
  std::vector<std::string> symbols;
  for (std::int32_t i = 0; i < vocabulary.size(); ++i) {
    if (i != vocabulary.blank_index()) symbols.push_back(vocabulary.token(i));
  }
  symbols.push_back("</s>");
  write_file(out_dir / "source_lm.arpa", unigram_arpa(symbols, {}));
  std::map<std::string, std::size_t> target_counts = token_counts;
  target_counts["</s>"] = args.utts;
  write_file(out_dir / "target_lm.arpa", unigram_arpa(symbols, target_counts));

  // A word-level LM over the reference words (with <unk>) so --lm-mode word
  // runs on this corpus too.
  std::map<std::string, std::size_t> word_counts;
  std::set<std::string> words;
  ctcdec::TextNormalizer norm;
  for (const auto& [id, text] : ctcdec::load_transcripts(out_dir / "ref.txt")) {
    for (const std::string& w : norm.words(text)) {
      words.insert(w);
      ++word_counts[w];
    }
  }
  std::vector<std::string> word_symbols(words.begin(), words.end());
  word_symbols.push_back("</s>");
  word_symbols.push_back("<unk>");
  word_counts["</s>"] = args.utts;
  write_file(out_dir / "word_lm.arpa", unigram_arpa(word_symbols, word_counts));

  // Training word list for OOV mining: every reference word except the two
  // lexicographically last, which become the corpus's OOV terms.
  std::size_t keep = words.size() > 2 ? words.size() - 2 : words.size();
  std::string train_words;
  std::size_t idx = 0;
  for (const std::string& w : words) {
    if (idx++ < keep) train_words += w + "\n";
  }
  write_file(out_dir / "train_words.txt", train_words);

  std::printf("wrote %zu utterances (T=%zu, K=%zu) under %s\n", args.utts,
              args.frames, args.masks, out_dir.string().c_str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// ilm-diagnose

struct DiagnoseArgs {
  std::string manifest;
  std::string utterance;
  std::string segments;
  std::string out_file;
  std::size_t masks = 5;
  double gamma = 0.25;
  double beta = 0.9;
  double lambda_ilm = 0.1;
  std::int32_t blank_index = 0;
  bool toy = false;
  std::uint64_t toy_seed = 7;
  std::int32_t toy_dim = 16;
  std::int32_t toy_radius = 2;
  std::int32_t toy_hidden = 16;
  std::int32_t toy_vocab = 6;
  std::size_t toy_frames = 40;
};

int run_ilm_diagnose(const DiagnoseArgs& args) {
  ctcdec::IlmConfig config;
  config.gamma = args.gamma;
  config.beta = args.beta;
  config.lambda_ilm = args.lambda_ilm;
  config.validate();

  std::map<std::string, std::vector<std::size_t>> segments;
  const std::map<std::string, std::vector<std::size_t>>* seg_ptr = nullptr;
  if (!args.segments.empty()) {
    segments = ctcdec::load_segment_boundaries(args.segments);
    seg_ptr = &segments;
  }
  auto plan_for = [&](std::size_t frames,
                      const std::string& utt) -> ctcdec::MaskPlan {
    if (seg_ptr != nullptr) {
      auto it = seg_ptr->find(utt);
      if (it == seg_ptr->end()) {
        throw ctcdec::ConfigError("no segment boundaries for utterance '" +
                                  utt + "'");
      }
      return ctcdec::plan_segments(frames, it->second);
    }
    return ctcdec::plan_equal(frames, args.masks);
  };

  ctcdec::IlmeResult result;
  if (args.toy) {
    ctcdec::ToyConvModel model(args.toy_seed, args.toy_dim, args.toy_vocab,
                               args.toy_radius, args.toy_hidden);
    std::string utt = args.utterance.empty() ? "smoke" : args.utterance;
    ctcdec::FeatureSequence features = ctcdec::synth_features(
        args.toy_seed, utt, args.toy_frames, args.toy_dim);
    result = ctcdec::run_ilme(features, model, plan_for(features.rows(), utt),
                              config, args.blank_index, utt);
  } else {
    if (args.manifest.empty() || args.utterance.empty()) {
      throw ctcdec::ConfigError(
          "ilm-diagnose needs --manifest and --utt (or --toy)");
    }
    ctcdec::FileScorer files =
        ctcdec::FileScorer::from_manifest_file(args.manifest);
    ctcdec::LogPosteriorMatrix original =
        files.load(args.utterance, ctcdec::kOriginalMask);
    ctcdec::MaskPlan plan = plan_for(original.rows(), args.utterance);
    std::vector<ctcdec::LogPosteriorMatrix> masked;
    for (std::size_t k = 0; k < plan.mask_count(); ++k) {
      masked.push_back(
          files.load(args.utterance, static_cast<std::int32_t>(k)));
    }
    result = ctcdec::run_ilme_precomputed(std::move(original),
                                          std::move(masked), plan, config,
                                          args.blank_index);
  }

  std::string report = ctcdec::format_ilme_diagnostics(result.diagnostics);
  if (args.out_file.empty()) {
    std::fputs(report.c_str(), stdout);
  } else {
    write_file(args.out_file, report);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"masking-based internal-LM estimation and CTC beam-search "
               "decoding"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "",
                 "key=value config file with a [decode] section; "
                 "flags override it");

  DecodeArgs decode_args;
  CLI::App* decode = app.add_subcommand(
      "decode", "decode a corpus (baseline | sf | ilme | ilme+sf)");
  add_decode_options(decode, decode_args);

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "WER / OOV-F1 report");
  eval->add_option("--ref", eval_args.ref, "reference transcripts")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--hyp", eval_args.hyps,
                   "LABEL=PATH hypothesis transcripts (repeatable)")
      ->required();
  eval->add_option("--baseline", eval_args.baseline,
                   "baseline label for WERR (default: first --hyp)");
  eval->add_option("--oov-vocab", eval_args.oov_vocab,
                   "training word list; OOV terms are mined against it")
      ->check(CLI::ExistingFile);
  eval->add_option("--oov-terms", eval_args.oov_terms,
                   "explicit OOV term list (overrides --oov-vocab)")
      ->check(CLI::ExistingFile);
  eval->add_option("--json", eval_args.json_out, "structured report path");
  eval->add_flag("--keep-case", eval_args.keep_case, "disable case folding");
  eval->add_flag("--keep-punct", eval_args.keep_punct,
                 "disable punctuation stripping");
  eval->add_flag("--per-utt", eval_args.per_utterance,
                 "include per-utterance counts");

  std::string lm_path, lm_text, lm_file;
  CLI::App* lm_score =
      app.add_subcommand("lm-score", "per-sentence LM log-probabilities");
  lm_score->add_option("--lm", lm_path, "ARPA LM (.gz ok)")
      ->required()
      ->check(CLI::ExistingFile);
  lm_score->add_option("--text", lm_text, "score one sentence");
  lm_score->add_option("file", lm_file, "sentences, one per line (else stdin)");

  std::size_t mp_frames = 0, mp_parts = 1;
  std::string mp_boundaries;
  CLI::App* mask_plan =
      app.add_subcommand("mask-plan", "print the masking partition");
  mask_plan->add_option("frames", mp_frames, "frame count T")->required();
  mask_plan->add_option("partitions", mp_parts, "partition count K");
  mask_plan->add_option("--boundaries", mp_boundaries,
                        "comma-separated interior boundaries");

  MakeToyArgs toy_args;
  CLI::App* make_toy = app.add_subcommand(
      "make-toy", "write a self-contained synthetic corpus (LPM fixtures)");
  make_toy->add_option("--out", toy_args.out_dir, "output directory")
      ->required();
  make_toy->add_option("--seed", toy_args.seed, "model + feature seed");
  make_toy->add_option("--utts", toy_args.utts, "utterance count");
  make_toy->add_option("--frames", toy_args.frames, "frames per utterance");
  make_toy->add_option("--dim", toy_args.dim, "feature dimension");
  make_toy->add_option("--vocab-size", toy_args.vocab_size, "token count");
  make_toy->add_option("--masks", toy_args.masks, "mask partition count");
  make_toy->add_option("--radius", toy_args.radius, "toy context radius");
  make_toy->add_option("--hidden", toy_args.hidden, "toy hidden units");

  DiagnoseArgs diag_args;
  CLI::App* diagnose = app.add_subcommand(
      "ilm-diagnose", "per-frame ILME diagnostics for one utterance");
  diagnose->add_option("--manifest", diag_args.manifest, "LPM manifest");
  diagnose->add_option("--utt", diag_args.utterance, "utterance id");
  diagnose->add_option("--segments", diag_args.segments,
                       "per-utterance mask boundaries");
  diagnose->add_option("--out", diag_args.out_file, "report path (else stdout)");
  diagnose->add_option("--masks", diag_args.masks, "equal partition count K");
  diagnose->add_option("--gamma", diag_args.gamma, "delta threshold");
  diagnose->add_option("--beta", diag_args.beta, "blank gate");
  diagnose->add_option("--lambda-ilm", diag_args.lambda_ilm, "ILM weight");
  diagnose->add_option("--blank-index", diag_args.blank_index, "blank index");
  diagnose->add_flag("--toy", diag_args.toy, "use the toy model");
  diagnose->add_option("--toy-seed", diag_args.toy_seed, "toy seed");
  diagnose->add_option("--toy-dim", diag_args.toy_dim, "toy feature dim");
  diagnose->add_option("--toy-radius", diag_args.toy_radius, "toy radius");
  diagnose->add_option("--toy-hidden", diag_args.toy_hidden, "toy hidden");
  diagnose->add_option("--toy-vocab", diag_args.toy_vocab, "toy vocab size");
  diagnose->add_option("--toy-frames", diag_args.toy_frames, "toy frames");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*decode) return run_decode(decode_args);
    if (*eval) return run_eval(eval_args);
    if (*lm_score) return run_lm_score(lm_path, lm_text, lm_file);
    if (*mask_plan) return run_mask_plan(mp_frames, mp_parts, mp_boundaries);
    if (*make_toy) return run_make_toy(toy_args);
    if (*diagnose) return run_ilm_diagnose(diag_args);
  } catch (const ctcdec::ConfigError& e) {
    std::fprintf(stderr, "ctcdec: %s\n", e.what());
    return kExitValidation;
  } catch (const ctcdec::UsageError& e) {
    std::fprintf(stderr, "ctcdec: %s\n", e.what());
    return kExitValidation;
  } catch (const ctcdec::FormatError& e) {
    std::fprintf(stderr, "ctcdec: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ctcdec: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}
