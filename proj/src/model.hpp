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

#ifndef SIMULMT_MODEL_HPP
#define SIMULMT_MODEL_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tensor.hpp"

namespace simulmt {

enum class Mode { full_sentence, waitk, adaptive };

Mode mode_from_string(const std::string& s);
std::string to_string(Mode m);

struct ModelDims {
  int src_vocab = 0;
  int tgt_vocab = 0;
  int embed = 512;
  int hidden = 512;
  int layers = 2;
};

struct LstmLayerParams {
  Tensor w_x;   // [in, 4H], gate order i,f,g,o
  Tensor w_h;   // [H, 4H]
  Tensor bias;  // [4H]
};

// All trainable parameters. dropout_p is a runtime knob (set by the trainer),
// not a parameter.
struct ModelParams {
  ModelDims dims;
  Tensor src_embed;  // [V_src, E]
  Tensor tgt_embed;  // [V_tgt, E]
  std::vector<LstmLayerParams> encoder;
  std::vector<LstmLayerParams> decoder;
  Tensor attn_combine;  // W_c [2H, H]
  Tensor out_proj;      // W_s [H, V_tgt]
  double dropout_p = 0.0;

  static ModelParams init(const ModelDims& dims, uint64_t seed);
  // Fixed manifest order; checkpoints and the optimizer walk this list.
  std::vector<std::pair<std::string, Tensor>> named() const;
  void zero_grad() const;
};

// Forward-only incremental encoding: positions are produced strictly left to
// right, so the prefix of a longer encoding is bit-identical to encoding the
// prefix directly.
class EncoderStates {
 public:
  int encoded() const { return static_cast<int>(top_.size()); }
  const Tensor& top(int pos) const { return top_.at(pos); }
  // [g, H] matrix of the first g top-layer states (cached per g).
  const Tensor& stacked_prefix(int g) const;

 private:
  friend EncoderStates encode_prefix(const ModelParams&,
                                     const std::vector<int>&, int);
  friend void encode_extend(const ModelParams&, const std::vector<int>&,
                            EncoderStates&, int);
  std::vector<Tensor> top_;
  std::vector<std::pair<Tensor, Tensor>> carry_;  // (h, c) per layer
  mutable Tensor stacked_;
  mutable int stacked_g_ = 0;
};

EncoderStates encode_prefix(const ModelParams& params,
                            const std::vector<int>& source_ids, int upto);
void encode_extend(const ModelParams& params,
                   const std::vector<int>& source_ids, EncoderStates& states,
                   int upto);

struct DecoderState {
  std::vector<std::pair<Tensor, Tensor>> carry;  // (h, c) per layer
  Tensor btilde;                                 // input-feed vector [1, H]
  static DecoderState initial(const ModelParams& params);
};

struct StepResult {
  Tensor log_probs;  // [V_tgt], log p over the target vocabulary
  Tensor attn;       // [g], attention weights over read positions
  DecoderState next;
};

// One decoder step over the first `encoded` source positions. The <wait>
// logit is masked to -inf once the whole source has been read (or always,
// for the fixed-schedule policies).
StepResult decode_step(const ModelParams& params, int prev_token,
                       const DecoderState& state, const EncoderStates& enc,
                       int source_len, bool force_mask_wait = false);

// Wait-k read schedule: g(j) = min(k + j - 1, I).
int waitk_g(int j, int k, int source_len);

struct TraceStep {
  enum class Action { read, write };
  Action action;
  int token = -1;    // write steps only; may be <wait> in adaptive traces
  int g = 0;         // source tokens read when the step happened
  Tensor log_probs;  // retained on write steps of training rollouts
};

struct DecodeTrace {
  Mode mode = Mode::adaptive;
  int k = 0;  // waitk only
  int source_len = 0;
  std::vector<TraceStep> steps;

  int read_count() const;
  // g value at each write step, in order.
  std::vector<int> write_g_sequence() const;
  // Emitted tokens at write steps (including <wait> entries).
  std::vector<int> emissions() const;
  // <wait> emissions before the first real output token.
  int waits_before_first_output() const;
};

// Throws unless g is nondecreasing, steps by 0 or 1, and stays in [1, I].
void validate_schedule(const std::vector<int>& g_sequence, int source_len);

// Training-time rollout for the adaptive policy: greedy <wait> decisions,
// teacher forcing for real tokens, distributions retained for the losses.
// max_T < 0 selects the default I + J + 1. wait_explore > 0 additionally
// forces a read with that probability per step (seeded, counter-based), so
// the CTC lattice keeps seeing wait slots before the policy has learned to
// ask for them; inference never explores.
DecodeTrace rollout_adaptive_train(const ModelParams& params,
                                   const std::vector<int>& source_ids,
                                   const std::vector<int>& reference_ids,
                                   int max_T = -1, double wait_explore = 0.0);

// Free-running adaptive decoding; stops at EOS or after max_T write steps.
DecodeTrace rollout_adaptive_free(const ModelParams& params,
                                  const std::vector<int>& source_ids,
                                  int max_T);

// Teacher-forced pass under a fixed schedule (waitk or full_sentence).
DecodeTrace teacher_forced_trace(const ModelParams& params,
                                 const std::vector<int>& source_ids,
                                 const std::vector<int>& reference_ids,
                                 Mode mode, int k);

// Greedy decoding under a fixed schedule.
DecodeTrace decode_free_fixed(const ModelParams& params,
                              const std::vector<int>& source_ids, Mode mode,
                              int k, int max_len);

}  // namespace simulmt

#endif  // SIMULMT_MODEL_HPP
