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

#include "trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "checkpoint.hpp"
#include "rng.hpp"

namespace simulmt {

// ---- config ----------------------------------------------------------------

std::map<std::string, std::string> parse_kv_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    size_t b = line.find_last_not_of(" \t\r");
    line = line.substr(a, b - a + 1);
    size_t eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      fail(Error::Code::parse, "config: line " + std::to_string(lineno) +
                                   " is not key=value: " + line);
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) {
      key.pop_back();
    }
    size_t v = value.find_first_not_of(" \t");
    value = v == std::string::npos ? "" : value.substr(v);
    kv[key] = value;  // later assignments override earlier ones
  }
  return kv;
}

namespace {

int to_int(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    fail(Error::Code::parse, "config: " + key + "=" + value + " is not an integer");
  }
}

uint64_t to_u64(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    uint64_t v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    fail(Error::Code::parse, "config: " + key + "=" + value + " is not an integer");
  }
}

double to_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    fail(Error::Code::parse, "config: " + key + "=" + value + " is not a number");
  }
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

TrainConfig TrainConfig::from_kv(const std::map<std::string, std::string>& kv) {
  TrainConfig c;
  for (const auto& [key, value] : kv) {
    if (key == "mode") c.mode = mode_from_string(value);
    else if (key == "k") c.k = to_int(key, value);
    else if (key == "alpha") c.alpha = to_double(key, value);
    else if (key == "lr") c.lr = to_double(key, value);
    else if (key == "clip_norm") c.clip_norm = to_double(key, value);
    else if (key == "dropout") c.dropout = to_double(key, value);
    else if (key == "wait_explore") c.wait_explore = to_double(key, value);
    else if (key == "wait_explore_decay")
      c.wait_explore_decay = to_double(key, value);
    else if (key == "batch_size") c.batch_size = to_int(key, value);
    else if (key == "embed_dim") c.embed_dim = to_int(key, value);
    else if (key == "hidden_dim") c.hidden_dim = to_int(key, value);
    else if (key == "layers") c.layers = to_int(key, value);
    else if (key == "max_epochs") c.max_epochs = to_int(key, value);
    else if (key == "seed") c.seed = to_u64(key, value);
    else if (key == "max_len") c.max_len = to_int(key, value);
    else if (key == "max_ratio") c.max_ratio = to_double(key, value);
    else if (key == "threads") c.threads = to_int(key, value);
    else if (key == "train_src") c.train_src = value;
    else if (key == "train_tgt") c.train_tgt = value;
    else if (key == "valid_src") c.valid_src = value;
    else if (key == "valid_tgt") c.valid_tgt = value;
    else if (key == "src_vocab") c.src_vocab = value;
    else if (key == "tgt_vocab") c.tgt_vocab = value;
    else if (key == "src_bpe") c.src_bpe = value;
    else if (key == "tgt_bpe") c.tgt_bpe = value;
    else if (key == "test_src") c.test_src = value;
    else if (key == "test_tgt") c.test_tgt = value;
    else if (key == "report_path") c.report_path = value;
    else fail(Error::Code::parse, "config: unknown key " + key);
  }
  if (c.k < 1) fail(Error::Code::invalid_argument, "config: k must be >= 1");
  if (c.lr <= 0 || c.clip_norm <= 0 || c.batch_size < 1 || c.max_epochs < 1) {
    fail(Error::Code::invalid_argument,
         "config: rates and sizes must be positive");
  }
  if (c.alpha < 0) {
    fail(Error::Code::invalid_argument, "config: alpha must be >= 0");
  }
  if (c.dropout < 0 || c.dropout >= 1) {
    fail(Error::Code::invalid_argument, "config: dropout outside [0,1)");
  }
  if (c.wait_explore < 0 || c.wait_explore > 1 || c.wait_explore_decay < 0 ||
      c.wait_explore_decay > 1) {
    fail(Error::Code::invalid_argument,
         "config: wait_explore and its decay must be in [0,1]");
  }
  return c;
}

std::map<std::string, std::string> TrainConfig::to_kv() const {
  std::map<std::string, std::string> kv;
  kv["mode"] = to_string(mode);
  kv["k"] = std::to_string(k);
  kv["alpha"] = fmt_double(alpha);
  kv["lr"] = fmt_double(lr);
  kv["clip_norm"] = fmt_double(clip_norm);
  kv["dropout"] = fmt_double(dropout);
  kv["wait_explore"] = fmt_double(wait_explore);
  kv["wait_explore_decay"] = fmt_double(wait_explore_decay);
  kv["batch_size"] = std::to_string(batch_size);
  kv["embed_dim"] = std::to_string(embed_dim);
  kv["hidden_dim"] = std::to_string(hidden_dim);
  kv["layers"] = std::to_string(layers);
  kv["max_epochs"] = std::to_string(max_epochs);
  kv["seed"] = std::to_string(seed);
  kv["max_len"] = std::to_string(max_len);
  kv["max_ratio"] = fmt_double(max_ratio);
  kv["threads"] = std::to_string(threads);
  kv["train_src"] = train_src;
  kv["train_tgt"] = train_tgt;
  kv["valid_src"] = valid_src;
  kv["valid_tgt"] = valid_tgt;
  kv["src_vocab"] = src_vocab;
  kv["tgt_vocab"] = tgt_vocab;
  if (!src_bpe.empty()) kv["src_bpe"] = src_bpe;
  if (!tgt_bpe.empty()) kv["tgt_bpe"] = tgt_bpe;
  if (!test_src.empty()) kv["test_src"] = test_src;
  if (!test_tgt.empty()) kv["test_tgt"] = test_tgt;
  if (!report_path.empty()) kv["report_path"] = report_path;
  return kv;
}

// ---- optimizer -------------------------------------------------------------

LossBundle sentence_loss(const ModelParams& params, const SentencePair& pair,
                         const TrainConfig& config, double wait_explore) {
  if (config.mode == Mode::adaptive) {
    DecodeTrace trace = rollout_adaptive_train(params, pair.source_ids,
                                               pair.target_ids, -1,
                                               wait_explore);
    return adaptive_losses(trace, pair.target_ids, config.alpha);
  }
  DecodeTrace trace = teacher_forced_trace(params, pair.source_ids,
                                           pair.target_ids, config.mode,
                                           config.k);
  LossBundle bundle;
  bundle.ent = sce_masked(trace, pair.target_ids);
  bundle.ctc = Tensor::scalar(0.0);
  bundle.del = Tensor::scalar(0.0);
  bundle.total = bundle.ent;
  return bundle;
}

double clip_global_norm(const ModelParams& params, double max_norm) {
  auto named = params.named();
  double sq = 0.0;
  for (auto& [name, t] : named) {
    if (!t.has_grad()) continue;
    for (double g : t.grad()) sq += g * g;
  }
  double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    double scale_by = max_norm / norm;
    for (auto& [name, t] : named) {
      if (!t.has_grad()) continue;
      Tensor tt = t;
      auto* node = tt.node();
      for (double& g : node->grad) g *= scale_by;
    }
  }
  return norm;
}

void adam_step(const ModelParams& params, TrainState& state, double lr,
               double beta1, double beta2, double eps) {
  auto named = params.named();
  if (state.moment1.size() != named.size()) {
    state.moment1.assign(named.size(), {});
    state.moment2.assign(named.size(), {});
    for (size_t i = 0; i < named.size(); ++i) {
      state.moment1[i].assign(named[i].second.size(), 0.0);
      state.moment2[i].assign(named[i].second.size(), 0.0);
    }
  }
  ++state.adam_step;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.adam_step));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.adam_step));
  bool quantize = precision() == Precision::f32;
  for (size_t i = 0; i < named.size(); ++i) {
    Tensor t = named[i].second;
    if (!t.has_grad()) continue;
    const auto& g = t.grad();
    auto& m = state.moment1[i];
    auto& v = state.moment2[i];
    auto& w = t.mutable_values();
    for (size_t j = 0; j < w.size(); ++j) {
      m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
      v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
      double mhat = m[j] / bc1;
      double vhat = v[j] / bc2;
      w[j] -= lr * mhat / (std::sqrt(vhat) + eps);
      if (quantize) w[j] = static_cast<double>(static_cast<float>(w[j]));
    }
  }
}

// ---- epoch loop ------------------------------------------------------------

double train_epoch(const ModelParams& params, TrainState& state,
                   const std::vector<Batch>& batches,
                   const TrainConfig& config) {
  set_training_mode(true);
  double explore = config.wait_explore *
                   std::pow(config.wait_explore_decay,
                            std::max(0, state.epoch - 1));
  double total = 0.0;
  int count = 0;
  for (size_t b = 0; b < batches.size(); ++b) {
    const Batch& batch = batches[b];
    params.zero_grad();
    std::vector<Tensor> losses;
    double ent_sum = 0.0, ctc_sum = 0.0, del_sum = 0.0;
    for (const SentencePair& pair : batch.pairs) {
      LossBundle bundle = sentence_loss(params, pair, config, explore);
      if (!bundle.ctc_feasible) ++state.ctc_infeasible;
      ent_sum += bundle.ent.item();
      ctc_sum += bundle.ctc.item();
      del_sum += bundle.del.item();
      losses.push_back(bundle.total);
    }
    Tensor batch_loss =
        scale(sum_all(concat_last(losses)), 1.0 / batch.size());
    double value = batch_loss.item();
    if (!std::isfinite(value)) {
      set_training_mode(false);
      std::ostringstream os;
      os << "train: non-finite loss " << value << " in batch " << b
         << " (ent=" << ent_sum << " ctc=" << ctc_sum << " del=" << del_sum
         << ")";
      fail(Error::Code::numeric, os.str());
    }
    backward(batch_loss);
    clip_global_norm(params, config.clip_norm);
    adam_step(params, state, state.lr);
    total += value;
    ++count;
  }
  set_training_mode(false);
  return total / count;
}

double validation_loss(const ModelParams& params,
                       const std::vector<SentencePair>& pairs,
                       const TrainConfig& config) {
  if (pairs.empty()) {
    fail(Error::Code::invalid_argument, "validate: empty validation set");
  }
  set_training_mode(false);
  NoGradGuard no_grad;
  double total = 0.0;
  for (const SentencePair& pair : pairs) {
    total += sentence_loss(params, pair, config).total.item();
  }
  return total / static_cast<double>(pairs.size());
}

void validate_and_schedule(const ModelParams& params, TrainState& state,
                           double val_loss, const TrainConfig& config,
                           const std::string& checkpoint_path) {
  if (state.epoch > 1 && val_loss > state.prev_val_loss) {
    state.lr /= std::sqrt(2.0);
  }
  state.prev_val_loss = val_loss;
  if (val_loss < state.best_val_loss) {
    state.best_val_loss = val_loss;
    Checkpoint ckpt;
    ckpt.params = params;
    ckpt.mode = config.mode;
    ckpt.k = config.k;
    ckpt.alpha = config.alpha;
    ckpt.epoch = state.epoch;
    ckpt.val_loss = val_loss;
    save_checkpoint(ckpt, checkpoint_path);
    state.best_checkpoint_path = checkpoint_path;
  }
}

// ---- full run ---------------------------------------------------------------

TrainSummary train_run(const TrainConfig& config, const std::string& run_dir,
                       bool echo_stdout) {
  if (config.train_src.empty() || config.train_tgt.empty() ||
      config.valid_src.empty() || config.valid_tgt.empty()) {
    fail(Error::Code::invalid_argument,
         "train: train_src/train_tgt/valid_src/valid_tgt are required");
  }
  if (config.src_vocab.empty() || config.tgt_vocab.empty()) {
    fail(Error::Code::invalid_argument,
         "train: src_vocab and tgt_vocab are required");
  }
  std::filesystem::create_directories(run_dir);

  {
    std::ofstream cfg(run_dir + "/config.resolved");
    if (!cfg) fail(Error::Code::io, "train: cannot write " + run_dir);
    for (const auto& [key, value] : config.to_kv()) {
      cfg << key << '=' << value << '\n';
    }
  }

  Vocabulary src_vocab = Vocabulary::load(config.src_vocab);
  Vocabulary tgt_vocab = Vocabulary::load(config.tgt_vocab);
  BpeModel src_bpe, tgt_bpe;
  bool use_src_bpe = !config.src_bpe.empty();
  bool use_tgt_bpe = !config.tgt_bpe.empty();
  if (use_src_bpe) src_bpe = BpeModel::load(config.src_bpe);
  if (use_tgt_bpe) tgt_bpe = BpeModel::load(config.tgt_bpe);

  auto raw_train = load_parallel_corpus(config.train_src, config.train_tgt,
                                        config.max_len, config.max_ratio);
  auto raw_valid = load_parallel_corpus(config.valid_src, config.valid_tgt,
                                        config.max_len, config.max_ratio);
  auto train_pairs =
      encode_pairs(raw_train, src_vocab, tgt_vocab,
                   use_src_bpe ? &src_bpe : nullptr,
                   use_tgt_bpe ? &tgt_bpe : nullptr);
  auto valid_pairs =
      encode_pairs(raw_valid, src_vocab, tgt_vocab,
                   use_src_bpe ? &src_bpe : nullptr,
                   use_tgt_bpe ? &tgt_bpe : nullptr);
  if (train_pairs.empty()) {
    fail(Error::Code::invalid_argument,
         "train: every training pair was filtered out");
  }

  ModelDims dims{src_vocab.size(), tgt_vocab.size(), config.embed_dim,
                 config.hidden_dim, config.layers};
  ModelParams params = ModelParams::init(dims, config.seed);
  params.dropout_p = config.dropout;
  seed_dropout(config.seed);

  TrainState state;
  state.lr = config.lr;

  std::string log_path = run_dir + "/train.log";
  std::ofstream log(log_path);
  if (!log) fail(Error::Code::io, "train: cannot write " + log_path);
  std::string ckpt_path = run_dir + "/best.ckpt";

  TrainSummary summary;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    state.epoch = epoch;
    auto t0 = std::chrono::steady_clock::now();
    auto batches =
        make_batches(train_pairs, config.batch_size, config.seed + epoch);
    double train_loss = train_epoch(params, state, batches, config);
    double val_loss = validation_loss(params, valid_pairs, config);
    validate_and_schedule(params, state, val_loss, config, ckpt_path);
    double secs = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    char line[256];
    std::snprintf(line, sizeof(line), "%d\t%.6f\t%.6f\t%.8g\t%.3f", epoch,
                  train_loss, val_loss, state.lr, secs);
    log << line << '\n';
    log.flush();
    if (echo_stdout) std::cout << line << std::endl;
  }

  summary.best_val_loss = state.best_val_loss;
  summary.best_checkpoint_path = state.best_checkpoint_path;
  summary.log_path = log_path;
  summary.epochs = config.max_epochs;
  summary.ctc_infeasible = state.ctc_infeasible;
  return summary;
}

}  // namespace simulmt
