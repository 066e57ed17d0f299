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

// Command-line front end; everything runs through the C API in simulmt.h.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "simulmt.h"

namespace {

int report_failure(const char* what, simulmt_status status) {
  std::cerr << "error: " << what << ": " << simulmt_last_error()
            << " (status " << status << ")" << std::endl;
  return 1;
}

struct ModelHandle {
  simulmt_model* model = nullptr;
  ~ModelHandle() { simulmt_model_free(model); }
};

const char* opt_cstr(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulmt: a simultaneous neural machine translation lab"};
  app.require_subcommand(1);

  // bpe-train ----------------------------------------------------------------
  auto* bpe = app.add_subcommand(
      "bpe-train", "Learn a BPE model and vocabulary from a corpus");
  std::string bpe_input, bpe_out, vocab_out;
  int merges = 1000, vocab_size = 4000;
  bool word_level = false;
  bpe->add_option("--input", bpe_input, "token-per-line corpus")->required();
  bpe->add_option("--merges", merges, "number of BPE merges");
  bpe->add_option("--vocab-size", vocab_size, "vocabulary budget");
  bpe->add_option("--bpe-out", bpe_out, "merge list output path");
  bpe->add_option("--vocab-out", vocab_out, "vocabulary output path")
      ->required();
  bpe->add_flag("--word-level", word_level,
                "skip subword learning, vocabulary over whitespace tokens");

  // train ----------------------------------------------------------------------
  auto* train = app.add_subcommand("train", "Train a model");
  std::string config_path, run_dir;
  std::vector<std::pair<std::string, std::string>> overrides;
  std::string t_mode, t_train_src, t_train_tgt, t_valid_src, t_valid_tgt;
  std::string t_src_vocab, t_tgt_vocab, t_src_bpe, t_tgt_bpe;
  int t_k = 0, t_batch = 0, t_embed = 0, t_hidden = 0, t_epochs = 0,
      t_threads = 0, t_max_len = 0;
  double t_alpha = -1, t_lr = 0, t_dropout = -1, t_clip = 0, t_ratio = 0;
  int64_t t_seed = -1;
  train->add_option("--config", config_path, "key=value config file");
  train->add_option("--run-dir", run_dir, "output directory")->required();
  train->add_option("--mode", t_mode, "waitk | adaptive | full-sentence");
  train->add_option("--k", t_k, "wait-k offset");
  train->add_option("--alpha", t_alpha, "delay penalty weight");
  train->add_option("--lr", t_lr, "learning rate");
  train->add_option("--clip-norm", t_clip, "gradient clipping norm");
  train->add_option("--dropout", t_dropout, "dropout probability");
  train->add_option("--batch-size", t_batch, "minibatch size");
  train->add_option("--embed-dim", t_embed, "embedding dimension");
  train->add_option("--hidden-dim", t_hidden, "hidden dimension");
  train->add_option("--epochs", t_epochs, "training epochs");
  train->add_option("--seed", t_seed, "run seed");
  train->add_option("--threads", t_threads, "worker threads");
  train->add_option("--max-len", t_max_len, "corpus length filter");
  train->add_option("--max-ratio", t_ratio, "corpus length-ratio filter");
  train->add_option("--train-src", t_train_src, "training source file");
  train->add_option("--train-tgt", t_train_tgt, "training target file");
  train->add_option("--valid-src", t_valid_src, "validation source file");
  train->add_option("--valid-tgt", t_valid_tgt, "validation target file");
  train->add_option("--src-vocab", t_src_vocab, "source vocabulary");
  train->add_option("--tgt-vocab", t_tgt_vocab, "target vocabulary");
  train->add_option("--src-bpe", t_src_bpe, "source BPE model");
  train->add_option("--tgt-bpe", t_tgt_bpe, "target BPE model");

  // translate / evaluate ---------------------------------------------------------
  std::string checkpoint, src_vocab, tgt_vocab, src_bpe_path, tgt_bpe_path;
  std::string input_path, output_path, traces_out, ref_path, metrics_out,
      hyp_out, d_mode;
  int d_k = 0, d_max_len = 0, d_threads = 0;
  bool emit_traces = false;

  auto add_model_opts = [&](CLI::App* cmd) {
    cmd->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    cmd->add_option("--src-vocab", src_vocab, "source vocabulary")->required();
    cmd->add_option("--tgt-vocab", tgt_vocab, "target vocabulary")->required();
    cmd->add_option("--src-bpe", src_bpe_path, "source BPE model");
    cmd->add_option("--tgt-bpe", tgt_bpe_path, "target BPE model");
    cmd->add_option("--mode", d_mode, "decode mode override");
    cmd->add_option("--k", d_k, "wait-k override");
    cmd->add_option("--max-len", d_max_len, "max output tokens");
    cmd->add_option("--threads", d_threads, "decoding threads");
  };

  auto* translate =
      app.add_subcommand("translate", "Decode a source file greedily");
  add_model_opts(translate);
  translate->add_option("--input", input_path, "source file")->required();
  translate->add_option("--output", output_path, "hypothesis file")->required();
  translate->add_flag("--emit-traces", emit_traces, "write action traces");
  translate->add_option("--traces-out", traces_out,
                        "trace file (default: <output>.traces)");

  auto* evaluate =
      app.add_subcommand("evaluate", "Decode and score a test set");
  add_model_opts(evaluate);
  evaluate->add_option("--input", input_path, "source file")->required();
  evaluate->add_option("--reference", ref_path, "reference file")->required();
  evaluate->add_option("--metrics-out", metrics_out, "metrics TSV path");
  evaluate->add_option("--hyp-out", hyp_out, "hypothesis output path");
  evaluate->add_flag("--emit-traces", emit_traces, "write action traces");
  evaluate->add_option("--traces-out", traces_out, "trace file path");

  // oracle-check ----------------------------------------------------------------
  auto* oracle = app.add_subcommand(
      "oracle-check", "Run the CTC and gradient self-check suites");
  int trials = 200;
  uint64_t oseed = 7;
  oracle->add_option("--trials", trials, "number of trials");
  oracle->add_option("--seed", oseed, "trial seed");

  CLI11_PARSE(app, argc, argv);

  if (bpe->parsed()) {
    if (word_level) {
      simulmt_status s = simulmt_vocab_build(bpe_input.c_str(), vocab_size,
                                             vocab_out.c_str());
      if (s != SIMULMT_OK) return report_failure("bpe-train", s);
      std::cout << "wrote " << vocab_out << std::endl;
      return 0;
    }
    if (bpe_out.empty()) {
      std::cerr << "error: bpe-train: --bpe-out is required unless "
                   "--word-level is set"
                << std::endl;
      return 1;
    }
    simulmt_status s = simulmt_bpe_train(bpe_input.c_str(), merges, vocab_size,
                                         bpe_out.c_str(), vocab_out.c_str());
    if (s != SIMULMT_OK) return report_failure("bpe-train", s);
    std::cout << "wrote " << bpe_out << " and " << vocab_out << std::endl;
    return 0;
  }

  if (train->parsed()) {
    std::ostringstream cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) {
        std::cerr << "error: train: cannot open config " << config_path
                  << std::endl;
        return 1;
      }
      cfg << in.rdbuf() << '\n';
    }
    // Flags appended after the file contents; later lines win.
    auto put = [&cfg](const std::string& key, const std::string& value) {
      cfg << key << '=' << value << '\n';
    };
    if (!t_mode.empty()) put("mode", t_mode);
    if (t_k > 0) put("k", std::to_string(t_k));
    if (t_alpha >= 0) put("alpha", std::to_string(t_alpha));
    if (t_lr > 0) put("lr", std::to_string(t_lr));
    if (t_clip > 0) put("clip_norm", std::to_string(t_clip));
    if (t_dropout >= 0) put("dropout", std::to_string(t_dropout));
    if (t_batch > 0) put("batch_size", std::to_string(t_batch));
    if (t_embed > 0) put("embed_dim", std::to_string(t_embed));
    if (t_hidden > 0) put("hidden_dim", std::to_string(t_hidden));
    if (t_epochs > 0) put("max_epochs", std::to_string(t_epochs));
    if (t_seed >= 0) put("seed", std::to_string(t_seed));
    if (t_threads > 0) put("threads", std::to_string(t_threads));
    if (t_max_len > 0) put("max_len", std::to_string(t_max_len));
    if (t_ratio > 0) put("max_ratio", std::to_string(t_ratio));
    if (!t_train_src.empty()) put("train_src", t_train_src);
    if (!t_train_tgt.empty()) put("train_tgt", t_train_tgt);
    if (!t_valid_src.empty()) put("valid_src", t_valid_src);
    if (!t_valid_tgt.empty()) put("valid_tgt", t_valid_tgt);
    if (!t_src_vocab.empty()) put("src_vocab", t_src_vocab);
    if (!t_tgt_vocab.empty()) put("tgt_vocab", t_tgt_vocab);
    if (!t_src_bpe.empty()) put("src_bpe", t_src_bpe);
    if (!t_tgt_bpe.empty()) put("tgt_bpe", t_tgt_bpe);
    simulmt_status s = simulmt_train(cfg.str().c_str(), run_dir.c_str());
    if (s != SIMULMT_OK) return report_failure("train", s);
    std::cout << "run artifacts in " << run_dir << std::endl;
    return 0;
  }

  if (translate->parsed() || evaluate->parsed()) {
    ModelHandle handle;
    simulmt_status s = simulmt_model_load(
        checkpoint.c_str(), src_vocab.c_str(), tgt_vocab.c_str(),
        opt_cstr(src_bpe_path), opt_cstr(tgt_bpe_path), &handle.model);
    if (s != SIMULMT_OK) return report_failure("model-load", s);

    if (translate->parsed()) {
      if (emit_traces && traces_out.empty()) {
        traces_out = output_path + ".traces";
      }
      s = simulmt_translate_file(handle.model, input_path.c_str(),
                                 opt_cstr(d_mode), d_k, d_max_len, d_threads,
                                 output_path.c_str(),
                                 emit_traces ? traces_out.c_str() : nullptr);
      if (s != SIMULMT_OK) return report_failure("translate", s);
      std::cout << "wrote " << output_path << std::endl;
      return 0;
    }

    if (emit_traces && traces_out.empty()) traces_out = metrics_out + ".traces";
    simulmt_metrics metrics{};
    s = simulmt_evaluate(handle.model, input_path.c_str(), ref_path.c_str(),
                         opt_cstr(d_mode), d_k, d_max_len, d_threads,
                         opt_cstr(metrics_out), opt_cstr(hyp_out),
                         emit_traces ? traces_out.c_str() : nullptr, &metrics);
    if (s != SIMULMT_OK) return report_failure("evaluate", s);
    std::printf("%.2f\t%.2f\t%.2f\t%lld\n", metrics.bleu, metrics.latency_mean,
                metrics.latency_std, metrics.n_sentences);
    return 0;
  }

  if (oracle->parsed()) {
    int passed = 0, total = 0;
    char report[512];
    simulmt_status s =
        simulmt_oracle_check(trials, oseed, &passed, &total, report,
                             sizeof(report));
    if (s != SIMULMT_OK) {
      std::cout << "FAIL " << passed << "/" << total << ": "
                << simulmt_last_error() << std::endl;
      return 1;
    }
    std::cout << "OK " << passed << "/" << total << std::endl;
    return 0;
  }

  return 0;
}
