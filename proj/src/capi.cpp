// Copyright 2026 The simulmt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "simulmt.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include "checkpoint.hpp"
#include "corpus.hpp"
#include "evalmetrics.hpp"
#include "oracle.hpp"
#include "trainer.hpp"

using namespace simulmt;

struct simulmt_model {
  Checkpoint ckpt;
  Vocabulary src_vocab;
  Vocabulary tgt_vocab;
  std::optional<BpeModel> src_bpe;
  std::optional<BpeModel> tgt_bpe;
};

namespace {

thread_local std::string t_last_error = "";

simulmt_status to_status(Error::Code code) {
  switch (code) {
    case Error::Code::invalid_argument:
      return SIMULMT_ERR_INVALID_ARG;
    case Error::Code::io:
      return SIMULMT_ERR_IO;
    case Error::Code::parse:
      return SIMULMT_ERR_PARSE;
    case Error::Code::numeric:
      return SIMULMT_ERR_NUMERIC;
    case Error::Code::internal:
      return SIMULMT_ERR_INTERNAL;
  }
  return SIMULMT_ERR_INTERNAL;
}

template <class Fn>
simulmt_status guarded(Fn&& fn) {
  try {
    fn();
    t_last_error.clear();
    return SIMULMT_OK;
  } catch (const Error& e) {
    t_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return SIMULMT_ERR_INTERNAL;
  } catch (...) {
    t_last_error = "unknown error";
    return SIMULMT_ERR_INTERNAL;
  }
}

const char* require(const char* arg, const char* name) {
  if (!arg) {
    fail(Error::Code::invalid_argument,
         std::string(name) + " must not be NULL");
  }
  return arg;
}

std::vector<std::vector<std::string>> read_token_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Error::Code::io, "cannot open " + path);
  std::vector<std::vector<std::string>> corpus;
  std::string line;
  while (std::getline(in, line)) corpus.push_back(split_tokens(line));
  if (corpus.empty()) fail(Error::Code::invalid_argument, path + " is empty");
  return corpus;
}

std::vector<std::string> read_raw_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Error::Code::io, "cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  if (!out) fail(Error::Code::io, "cannot write " + path);
  for (const auto& l : lines) out << l << '\n';
}

struct DecodeArgs {
  Mode mode;
  int k;
  int max_len;
  int threads;
};

DecodeArgs resolve_decode_args(const simulmt_model* model, const char* mode,
                               int k, int max_len, int threads) {
  DecodeArgs args;
  args.mode = mode && *mode ? mode_from_string(mode) : model->ckpt.mode;
  args.k = k > 0 ? k : model->ckpt.k;
  args.max_len = max_len > 0 ? max_len : 2 * 60;
  args.threads = threads > 0 ? threads : 1;
  return args;
}

TranslationResult run_translation(simulmt_model* model, const char* source_path,
                                  const DecodeArgs& args) {
  auto lines = read_raw_lines(source_path);
  if (lines.empty()) {
    fail(Error::Code::invalid_argument,
         std::string(source_path) + " is empty");
  }
  return translate_lines(model->ckpt.params, model->src_vocab,
                         model->tgt_vocab,
                         model->src_bpe ? &*model->src_bpe : nullptr, lines,
                         args.mode, args.k, args.max_len, args.threads);
}

void write_translation_outputs(const simulmt_model* model,
                               const TranslationResult& result,
                               const char* hyp_out_path,
                               const char* traces_out_path) {
  if (hyp_out_path) {
    std::vector<std::string> lines;
    lines.reserve(result.hypotheses.size());
    for (const auto& words : result.hypotheses) {
      std::string s;
      for (size_t i = 0; i < words.size(); ++i) {
        if (i) s += ' ';
        s += words[i];
      }
      lines.push_back(std::move(s));
    }
    write_lines(hyp_out_path, lines);
  }
  if (traces_out_path) {
    std::vector<std::string> lines;
    lines.reserve(result.traces.size());
    for (const auto& trace : result.traces) {
      lines.push_back(render_trace(trace, model->tgt_vocab));
    }
    write_lines(traces_out_path, lines);
  }
}

}  // namespace

extern "C" {

const char* simulmt_version(void) { return "0.1.0"; }

const char* simulmt_last_error(void) { return t_last_error.c_str(); }

simulmt_status simulmt_bpe_train(const char* corpus_path, int merge_count,
                                 int vocab_size, const char* bpe_out_path,
                                 const char* vocab_out_path) {
  return guarded([&] {
    auto corpus = read_token_lines(require(corpus_path, "corpus_path"));
    require(bpe_out_path, "bpe_out_path");
    require(vocab_out_path, "vocab_out_path");
    BpeModel bpe = train_bpe(corpus, merge_count);
    bpe.save(bpe_out_path);
    std::vector<std::vector<std::string>> segmented;
    segmented.reserve(corpus.size());
    for (const auto& sent : corpus) segmented.push_back(bpe.apply(sent));
    Vocabulary::build(segmented, vocab_size).save(vocab_out_path);
  });
}

simulmt_status simulmt_vocab_build(const char* corpus_path, int vocab_size,
                                   const char* vocab_out_path) {
  return guarded([&] {
    auto corpus = read_token_lines(require(corpus_path, "corpus_path"));
    require(vocab_out_path, "vocab_out_path");
    Vocabulary::build(corpus, vocab_size).save(vocab_out_path);
  });
}

simulmt_status simulmt_train(const char* config_text, const char* run_dir) {
  return guarded([&] {
    auto kv = parse_kv_text(require(config_text, "config_text"));
    TrainConfig config = TrainConfig::from_kv(kv);
    train_run(config, require(run_dir, "run_dir"));
  });
}

simulmt_status simulmt_model_load(const char* checkpoint_path,
                                  const char* src_vocab_path,
                                  const char* tgt_vocab_path,
                                  const char* src_bpe_path,
                                  const char* tgt_bpe_path,
                                  simulmt_model** out_model) {
  return guarded([&] {
    if (!out_model) {
      fail(Error::Code::invalid_argument, "out_model must not be NULL");
    }
    auto model = std::make_unique<simulmt_model>();
    model->ckpt = load_checkpoint(require(checkpoint_path, "checkpoint_path"));
    model->ckpt.params.dropout_p = 0.0;  // inference only
    model->src_vocab = Vocabulary::load(require(src_vocab_path, "src_vocab_path"));
    model->tgt_vocab = Vocabulary::load(require(tgt_vocab_path, "tgt_vocab_path"));
    if (model->ckpt.params.dims.src_vocab != model->src_vocab.size() ||
        model->ckpt.params.dims.tgt_vocab != model->tgt_vocab.size()) {
      fail(Error::Code::invalid_argument,
           "vocabulary sizes do not match the checkpoint");
    }
    if (src_bpe_path && *src_bpe_path) {
      model->src_bpe = BpeModel::load(src_bpe_path);
    }
    if (tgt_bpe_path && *tgt_bpe_path) {
      model->tgt_bpe = BpeModel::load(tgt_bpe_path);
    }
    *out_model = model.release();
  });
}

void simulmt_model_free(simulmt_model* model) { delete model; }

simulmt_status simulmt_translate_file(simulmt_model* model,
                                      const char* source_path,
                                      const char* mode, int k, int max_len,
                                      int threads, const char* hyp_out_path,
                                      const char* traces_out_path) {
  return guarded([&] {
    if (!model) fail(Error::Code::invalid_argument, "model must not be NULL");
    require(source_path, "source_path");
    require(hyp_out_path, "hyp_out_path");
    DecodeArgs args = resolve_decode_args(model, mode, k, max_len, threads);
    TranslationResult result = run_translation(model, source_path, args);
    write_translation_outputs(model, result, hyp_out_path, traces_out_path);
  });
}

simulmt_status simulmt_evaluate(simulmt_model* model, const char* source_path,
                                const char* ref_path, const char* mode, int k,
                                int max_len, int threads,
                                const char* metrics_out_path,
                                const char* hyp_out_path,
                                const char* traces_out_path,
                                simulmt_metrics* out) {
  return guarded([&] {
    if (!model) fail(Error::Code::invalid_argument, "model must not be NULL");
    require(source_path, "source_path");
    require(ref_path, "ref_path");
    DecodeArgs args = resolve_decode_args(model, mode, k, max_len, threads);
    TranslationResult result = run_translation(model, source_path, args);
    MetricsReport report =
        score_translation(result, read_raw_lines(ref_path));
    write_translation_outputs(model, result, hyp_out_path, traces_out_path);
    if (metrics_out_path) write_lines(metrics_out_path, {report.tsv()});
    if (out) {
      out->bleu = report.bleu_score;
      out->latency_mean = report.lat.mean;
      out->latency_std = report.lat.stddev;
      out->n_sentences = report.n_sentences;
    }
  });
}

simulmt_status simulmt_oracle_check(int trials, uint64_t seed, int* passed,
                                    int* total, char* report,
                                    size_t report_len) {
  int local_passed = 0, local_total = 0;
  simulmt_status status = guarded([&] {
    OracleReport r = run_oracle_checks(trials, seed);
    local_passed = r.passed;
    local_total = r.total;
    std::ostringstream os;
    if (r.ok()) {
      os << "OK " << r.passed << "/" << r.total
         << " (max |dp-brute| " << r.max_abs_diff << ", max grad rel err "
         << r.max_rel_err << ", max mass dev " << r.max_mass_dev << ")";
    } else {
      os << "FAIL " << r.passed << "/" << r.total << ": " << r.failures[0];
    }
    if (report && report_len > 0) {
      std::string s = os.str();
      std::strncpy(report, s.c_str(), report_len - 1);
      report[report_len - 1] = '\0';
    }
    if (!r.ok()) fail(Error::Code::numeric, os.str());
  });
  if (passed) *passed = local_passed;
  if (total) *total = local_total;
  return status;
}

}  // extern "C"
