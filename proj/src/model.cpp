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

#include "model.hpp"

#include <algorithm>
#include <random>

#include "common.hpp"
#include "rng.hpp"

namespace simulmt {

Mode mode_from_string(const std::string& s) {
  if (s == "full-sentence") return Mode::full_sentence;
  if (s == "waitk") return Mode::waitk;
  if (s == "adaptive") return Mode::adaptive;
  fail(Error::Code::invalid_argument,
       "mode: expected full-sentence|waitk|adaptive, got " + s);
}

std::string to_string(Mode m) {
  switch (m) {
    case Mode::full_sentence:
      return "full-sentence";
    case Mode::waitk:
      return "waitk";
    case Mode::adaptive:
      return "adaptive";
  }
  return "?";
}

// ---- parameters ------------------------------------------------------------

namespace {

Tensor init_uniform(Shape shape, std::mt19937_64& rng, double r = 0.1) {
  std::uniform_real_distribution<double> dist(-r, r);
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return Tensor::from_values(std::move(shape), std::move(v), true);
}

LstmLayerParams init_lstm(int in, int hidden, std::mt19937_64& rng) {
  LstmLayerParams p;
  p.w_x = init_uniform({in, 4 * hidden}, rng);
  p.w_h = init_uniform({hidden, 4 * hidden}, rng);
  // Forget-gate bias starts at 1, the rest at 0.
  std::vector<double> b(4 * hidden, 0.0);
  for (int i = hidden; i < 2 * hidden; ++i) b[i] = 1.0;
  p.bias = Tensor::from_values({4 * hidden}, std::move(b), true);
  return p;
}

}  // namespace

ModelParams ModelParams::init(const ModelDims& dims, uint64_t seed) {
  if (dims.src_vocab <= 0 || dims.tgt_vocab <= 0 || dims.embed <= 0 ||
      dims.hidden <= 0 || dims.layers <= 0) {
    fail(Error::Code::invalid_argument, "model: non-positive dimension");
  }
  std::mt19937_64 rng(seed);
  ModelParams p;
  p.dims = dims;
  p.src_embed = init_uniform({dims.src_vocab, dims.embed}, rng);
  p.tgt_embed = init_uniform({dims.tgt_vocab, dims.embed}, rng);
  for (int l = 0; l < dims.layers; ++l) {
    int in = l == 0 ? dims.embed : dims.hidden;
    p.encoder.push_back(init_lstm(in, dims.hidden, rng));
  }
  for (int l = 0; l < dims.layers; ++l) {
    // Layer 0 consumes [embedding; input feed].
    int in = l == 0 ? dims.embed + dims.hidden : dims.hidden;
    p.decoder.push_back(init_lstm(in, dims.hidden, rng));
  }
  p.attn_combine = init_uniform({2 * dims.hidden, dims.hidden}, rng);
  p.out_proj = init_uniform({dims.hidden, dims.tgt_vocab}, rng);
  return p;
}

std::vector<std::pair<std::string, Tensor>> ModelParams::named() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("src_embed", src_embed);
  out.emplace_back("tgt_embed", tgt_embed);
  for (size_t l = 0; l < encoder.size(); ++l) {
    std::string base = "encoder.l" + std::to_string(l);
    out.emplace_back(base + ".w_x", encoder[l].w_x);
    out.emplace_back(base + ".w_h", encoder[l].w_h);
    out.emplace_back(base + ".bias", encoder[l].bias);
  }
  for (size_t l = 0; l < decoder.size(); ++l) {
    std::string base = "decoder.l" + std::to_string(l);
    out.emplace_back(base + ".w_x", decoder[l].w_x);
    out.emplace_back(base + ".w_h", decoder[l].w_h);
    out.emplace_back(base + ".bias", decoder[l].bias);
  }
  out.emplace_back("attn_combine", attn_combine);
  out.emplace_back("out_proj", out_proj);
  return out;
}

void ModelParams::zero_grad() const {
  for (auto& [name, t] : named()) {
    Tensor tt = t;
    tt.zero_grad();
  }
}

// ---- recurrent cells -------------------------------------------------------

namespace {

// One LSTM cell step; x is [1,in], carries are [1,H].
std::pair<Tensor, Tensor> lstm_cell(const LstmLayerParams& p, const Tensor& x,
                                    const Tensor& h, const Tensor& c,
                                    int hidden) {
  Tensor gates = add(add(matmul(x, p.w_x), matmul(h, p.w_h)), p.bias);
  Tensor in_g = sigmoid(slice_last(gates, 0, hidden));
  Tensor forget_g = sigmoid(slice_last(gates, hidden, hidden));
  Tensor cand = tanh_t(slice_last(gates, 2 * hidden, hidden));
  Tensor out_g = sigmoid(slice_last(gates, 3 * hidden, hidden));
  Tensor c_new = add(mul(forget_g, c), mul(in_g, cand));
  Tensor h_new = mul(out_g, tanh_t(c_new));
  return {h_new, c_new};
}

// Runs x through the stacked layers, updating carries in place; returns the
// top hidden state. Dropout sits on the inputs of each layer.
Tensor run_stack(const std::vector<LstmLayerParams>& layers,
                 std::vector<std::pair<Tensor, Tensor>>& carry, Tensor x,
                 int hidden, double dropout_p) {
  for (size_t l = 0; l < layers.size(); ++l) {
    Tensor in = dropout(x, dropout_p);
    auto [h, c] = lstm_cell(layers[l], in, carry[l].first, carry[l].second,
                            hidden);
    carry[l] = {h, c};
    x = h;
  }
  return x;
}

std::vector<std::pair<Tensor, Tensor>> zero_carries(int layers, int hidden) {
  std::vector<std::pair<Tensor, Tensor>> carry;
  carry.reserve(layers);
  for (int l = 0; l < layers; ++l) {
    carry.emplace_back(Tensor::zeros({1, hidden}), Tensor::zeros({1, hidden}));
  }
  return carry;
}

int argmax_index(const Tensor& t) {
  const auto& v = t.values();
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

// ---- encoder ---------------------------------------------------------------

const Tensor& EncoderStates::stacked_prefix(int g) const {
  if (g < 1 || g > encoded()) {
    fail(Error::Code::invalid_argument,
         "attention: prefix length " + std::to_string(g) + " outside [1," +
             std::to_string(encoded()) + "]");
  }
  if (stacked_g_ != g || !stacked_.defined()) {
    std::vector<Tensor> rows(top_.begin(), top_.begin() + g);
    stacked_ = concat_rows(rows);
    stacked_g_ = g;
  }
  return stacked_;
}

EncoderStates encode_prefix(const ModelParams& params,
                            const std::vector<int>& source_ids, int upto) {
  EncoderStates states;
  states.carry_ = zero_carries(params.dims.layers, params.dims.hidden);
  encode_extend(params, source_ids, states, upto);
  return states;
}

void encode_extend(const ModelParams& params,
                   const std::vector<int>& source_ids, EncoderStates& states,
                   int upto) {
  int total = static_cast<int>(source_ids.size());
  if (upto < 1 || upto > total) {
    fail(Error::Code::invalid_argument,
         "encode: prefix length " + std::to_string(upto) + " outside [1," +
             std::to_string(total) + "]");
  }
  if (upto < states.encoded()) {
    fail(Error::Code::invalid_argument,
         "encode: cannot shrink prefix from " +
             std::to_string(states.encoded()) + " to " + std::to_string(upto));
  }
  for (int pos = states.encoded(); pos < upto; ++pos) {
    Tensor emb = embedding_lookup(params.src_embed, {source_ids[pos]});
    Tensor top = run_stack(params.encoder, states.carry_, emb,
                           params.dims.hidden, params.dropout_p);
    states.top_.push_back(top);
  }
}

// ---- decoder ---------------------------------------------------------------

DecoderState DecoderState::initial(const ModelParams& params) {
  DecoderState s;
  s.carry = zero_carries(params.dims.layers, params.dims.hidden);
  s.btilde = Tensor::zeros({1, params.dims.hidden});
  return s;
}

StepResult decode_step(const ModelParams& params, int prev_token,
                       const DecoderState& state, const EncoderStates& enc,
                       int source_len, bool force_mask_wait) {
  int g = enc.encoded();
  if (g < 1) {
    fail(Error::Code::invalid_argument, "decode_step: no encoded positions");
  }
  Tensor emb = embedding_lookup(params.tgt_embed, {prev_token});
  Tensor x = concat_last({emb, state.btilde});  // input feeding

  StepResult r;
  r.next.carry = state.carry;
  Tensor d = run_stack(params.decoder, r.next.carry, x, params.dims.hidden,
                       params.dropout_p);

  const Tensor& mem = enc.stacked_prefix(g);
  Tensor scores = matmul_nt(d, mem);           // dot attention, [1,g]
  Tensor attn = softmax_last(scores);
  Tensor context = matmul(attn, mem);          // [1,H]
  Tensor btilde = tanh_t(matmul(concat_last({context, d}), params.attn_combine));
  r.next.btilde = btilde;

  Tensor logits = matmul(dropout(btilde, params.dropout_p), params.out_proj);
  if (force_mask_wait || g == source_len) {
    logits = mask_index(logits, kWaitId);
  }
  r.log_probs = reshape(log_softmax_last(logits), {params.dims.tgt_vocab});
  r.attn = reshape(attn, {g});
  return r;
}

int waitk_g(int j, int k, int source_len) {
  if (j < 1 || k < 1 || source_len < 1) {
    fail(Error::Code::invalid_argument, "waitk_g: j, k, I must be >= 1");
  }
  return std::min(k + j - 1, source_len);
}

// ---- traces ----------------------------------------------------------------

int DecodeTrace::read_count() const {
  int n = 0;
  for (const auto& s : steps) n += s.action == TraceStep::Action::read;
  return n;
}

std::vector<int> DecodeTrace::write_g_sequence() const {
  std::vector<int> g;
  for (const auto& s : steps) {
    if (s.action == TraceStep::Action::write) g.push_back(s.g);
  }
  return g;
}

std::vector<int> DecodeTrace::emissions() const {
  std::vector<int> out;
  for (const auto& s : steps) {
    if (s.action == TraceStep::Action::write) out.push_back(s.token);
  }
  return out;
}

int DecodeTrace::waits_before_first_output() const {
  int n = 0;
  for (const auto& s : steps) {
    if (s.action != TraceStep::Action::write) continue;
    if (s.token == kWaitId) {
      ++n;
    } else {
      break;
    }
  }
  return n;
}

void validate_schedule(const std::vector<int>& g_sequence, int source_len) {
  int prev = -1;
  for (size_t t = 0; t < g_sequence.size(); ++t) {
    int g = g_sequence[t];
    if (g < 1 || g > source_len) {
      fail(Error::Code::internal,
           "schedule: g=" + std::to_string(g) + " outside [1," +
               std::to_string(source_len) + "] at step " + std::to_string(t));
    }
    if (t > 0 && (g < prev || g > prev + 1)) {
      fail(Error::Code::internal,
           "schedule: g jumped from " + std::to_string(prev) + " to " +
               std::to_string(g) + " at step " + std::to_string(t));
    }
    prev = g;
  }
}

// ---- rollouts --------------------------------------------------------------

DecodeTrace rollout_adaptive_train(const ModelParams& params,
                                   const std::vector<int>& source_ids,
                                   const std::vector<int>& reference_ids,
                                   int max_T, double wait_explore) {
  int source_len = static_cast<int>(source_ids.size());
  int target_len = static_cast<int>(reference_ids.size());
  if (source_len < 1 || target_len < 1) {
    fail(Error::Code::invalid_argument, "rollout: empty sentence");
  }
  if (max_T < 0) max_T = source_len + target_len + 1;

  DecodeTrace trace;
  trace.mode = Mode::adaptive;
  trace.source_len = source_len;

  EncoderStates enc = encode_prefix(params, source_ids, 1);
  int g = 1;
  trace.steps.push_back({TraceStep::Action::read, -1, g, {}});

  DecoderState state = DecoderState::initial(params);
  int prev_token = kBosId;
  int ref_pos = 0;
  int writes = 0;
  while (ref_pos < target_len) {
    if (writes >= max_T) {
      fail(Error::Code::numeric,
           "rollout: exceeded max_T=" + std::to_string(max_T) +
               " with " + std::to_string(target_len - ref_pos) +
               " reference tokens left");
    }
    StepResult sr = decode_step(params, prev_token, state, enc, source_len);
    int best = argmax_index(sr.log_probs);
    // Exploration replaces the greedy read/write choice with a coin flip so
    // both wait-heavy and emit-heavy prefixes stay in the training
    // distribution while the policy is still forming.
    bool wait_decision = best == kWaitId;
    if (wait_explore > 0.0 &&
        counter_uniform(dropout_seed(), next_dropout_call(), 0x9d) <
            wait_explore) {
      wait_decision =
          counter_uniform(dropout_seed(), next_dropout_call(), 0xc3) < 0.5;
    }
    if (wait_decision && g < source_len) {
      trace.steps.push_back(
          {TraceStep::Action::write, kWaitId, g, sr.log_probs});
      ++g;
      encode_extend(params, source_ids, enc, g);
      trace.steps.push_back({TraceStep::Action::read, -1, g, {}});
      prev_token = kWaitId;
    } else {
      int y = reference_ids[ref_pos++];
      trace.steps.push_back({TraceStep::Action::write, y, g, sr.log_probs});
      prev_token = y;
    }
    state = sr.next;
    ++writes;
  }
  return trace;
}

DecodeTrace rollout_adaptive_free(const ModelParams& params,
                                  const std::vector<int>& source_ids,
                                  int max_T) {
  int source_len = static_cast<int>(source_ids.size());
  if (source_len < 1) {
    fail(Error::Code::invalid_argument, "rollout: empty sentence");
  }
  DecodeTrace trace;
  trace.mode = Mode::adaptive;
  trace.source_len = source_len;

  EncoderStates enc = encode_prefix(params, source_ids, 1);
  int g = 1;
  trace.steps.push_back({TraceStep::Action::read, -1, g, {}});

  DecoderState state = DecoderState::initial(params);
  int prev_token = kBosId;
  for (int writes = 0; writes < max_T; ++writes) {
    StepResult sr = decode_step(params, prev_token, state, enc, source_len);
    int best = argmax_index(sr.log_probs);
    if (best == kWaitId && g < source_len) {
      trace.steps.push_back({TraceStep::Action::write, kWaitId, g, {}});
      ++g;
      encode_extend(params, source_ids, enc, g);
      trace.steps.push_back({TraceStep::Action::read, -1, g, {}});
      prev_token = kWaitId;
    } else {
      trace.steps.push_back({TraceStep::Action::write, best, g, {}});
      prev_token = best;
      if (best == kEosId) break;
    }
    state = sr.next;
  }
  return trace;
}

namespace {

// Shared fixed-schedule walk; `pick` chooses the emission for write step j
// given the distribution, and emissions stop after J steps or when pick
// returns EOS.
DecodeTrace fixed_schedule_walk(const ModelParams& params,
                                const std::vector<int>& source_ids, Mode mode,
                                int k, int max_writes,
                                const std::vector<int>* reference,
                                bool retain_logprobs) {
  int source_len = static_cast<int>(source_ids.size());
  if (source_len < 1) {
    fail(Error::Code::invalid_argument, "decode: empty sentence");
  }
  DecodeTrace trace;
  trace.mode = mode;
  trace.k = k;
  trace.source_len = source_len;

  EncoderStates enc = encode_prefix(params, source_ids, 1);
  int g = 1;
  trace.steps.push_back({TraceStep::Action::read, -1, g, {}});

  DecoderState state = DecoderState::initial(params);
  int prev_token = kBosId;
  for (int j = 1; j <= max_writes; ++j) {
    int want = mode == Mode::waitk ? waitk_g(j, k, source_len) : source_len;
    while (g < want) {
      ++g;
      encode_extend(params, source_ids, enc, g);
      trace.steps.push_back({TraceStep::Action::read, -1, g, {}});
    }
    StepResult sr =
        decode_step(params, prev_token, state, enc, source_len, true);
    int y = reference ? (*reference)[j - 1] : argmax_index(sr.log_probs);
    trace.steps.push_back({TraceStep::Action::write, y, g,
                           retain_logprobs ? sr.log_probs : Tensor()});
    prev_token = y;
    state = sr.next;
    if (!reference && y == kEosId) break;
  }
  return trace;
}

}  // namespace

DecodeTrace teacher_forced_trace(const ModelParams& params,
                                 const std::vector<int>& source_ids,
                                 const std::vector<int>& reference_ids,
                                 Mode mode, int k) {
  if (mode == Mode::adaptive) {
    fail(Error::Code::invalid_argument,
         "teacher_forced_trace: adaptive mode uses rollout_adaptive_train");
  }
  return fixed_schedule_walk(params, source_ids, mode, k,
                             static_cast<int>(reference_ids.size()),
                             &reference_ids, true);
}

DecodeTrace decode_free_fixed(const ModelParams& params,
                              const std::vector<int>& source_ids, Mode mode,
                              int k, int max_len) {
  if (mode == Mode::adaptive) {
    fail(Error::Code::invalid_argument,
         "decode_free_fixed: adaptive mode uses rollout_adaptive_free");
  }
  return fixed_schedule_walk(params, source_ids, mode, k, max_len, nullptr,
                             false);
}

}  // namespace simulmt
