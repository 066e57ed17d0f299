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

#ifndef SIMULMT_TRAINER_HPP
#define SIMULMT_TRAINER_HPP

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "losses.hpp"
#include "model.hpp"

namespace simulmt {

struct TrainConfig {
  Mode mode = Mode::adaptive;
  int k = 3;
  double alpha = 0.0;
  double lr = 1e-3;
  double clip_norm = 5.0;
  double dropout = 0.3;
  // Adaptive training forces extra reads with this per-step probability,
  // decayed per epoch, so wait placements stay in the CTC lattice while the
  // policy is still cold. Greedy decoding is unaffected.
  double wait_explore = 0.3;
  double wait_explore_decay = 0.9;
  int batch_size = 64;
  int embed_dim = 512;
  int hidden_dim = 512;
  int layers = 2;
  int max_epochs = 10;
  uint64_t seed = 42;
  int max_len = 60;
  double max_ratio = 9.0;
  int threads = 1;
  std::string train_src, train_tgt, valid_src, valid_tgt;
  std::string src_vocab, tgt_vocab;
  std::string src_bpe, tgt_bpe;   // optional
  std::string test_src, test_tgt; // accepted for run bookkeeping
  std::string report_path;

  static TrainConfig from_kv(const std::map<std::string, std::string>& kv);
  std::map<std::string, std::string> to_kv() const;
};

// "key=value" lines; '#' starts a comment; later assignments win, which is
// how CLI flags override config-file values.
std::map<std::string, std::string> parse_kv_text(const std::string& text);

struct TrainState {
  int epoch = 0;
  double lr = 0.0;
  int64_t adam_step = 0;
  double prev_val_loss = std::numeric_limits<double>::infinity();
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::string best_checkpoint_path;
  // Adam moments, aligned with ModelParams::named() order.
  std::vector<std::vector<double>> moment1;
  std::vector<std::vector<double>> moment2;
  int64_t ctc_infeasible = 0;
};

// Per-sentence objective for the configured mode: SCE for the fixed
// schedules, the combined objective for the adaptive model. wait_explore
// only applies to adaptive rollouts (0 for validation).
LossBundle sentence_loss(const ModelParams& params, const SentencePair& pair,
                         const TrainConfig& config, double wait_explore = 0.0);

// Scales all gradients so the global norm is at most max_norm; returns the
// pre-clip norm.
double clip_global_norm(const ModelParams& params, double max_norm);

void adam_step(const ModelParams& params, TrainState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// One pass over the batches: forward, backward, clip at config.clip_norm,
// Adam update. Returns the mean batch loss. Aborts on a non-finite loss.
double train_epoch(const ModelParams& params, TrainState& state,
                   const std::vector<Batch>& batches,
                   const TrainConfig& config);

// Mean per-sentence validation loss with dropout disabled.
double validation_loss(const ModelParams& params,
                       const std::vector<SentencePair>& pairs,
                       const TrainConfig& config);

// Applies the 1/sqrt(2) decay when the loss regressed against the previous
// epoch and checkpoints when it is the best seen.
void validate_and_schedule(const ModelParams& params, TrainState& state,
                           double val_loss, const TrainConfig& config,
                           const std::string& checkpoint_path);

struct TrainSummary {
  double best_val_loss = 0.0;
  std::string best_checkpoint_path;
  std::string log_path;
  int epochs = 0;
  int64_t ctc_infeasible = 0;
};

// Full run: loads data, trains max_epochs epochs, writes config.resolved,
// train.log and best.ckpt under run_dir.
TrainSummary train_run(const TrainConfig& config, const std::string& run_dir,
                       bool echo_stdout = true);

}  // namespace simulmt

#endif  // SIMULMT_TRAINER_HPP
