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

#include <cmath>
#include <filesystem>
#include <random>

#include "checkpoint.hpp"
#include "doctest.h"
#include "model.hpp"

using namespace simulmt;

namespace {

ModelParams small_params(uint64_t seed, int vocab = 12, int embed = 6,
                         int hidden = 8, int layers = 2) {
  ModelDims dims{vocab, vocab, embed, hidden, layers};
  return ModelParams::init(dims, seed);
}

void zero_all(ModelParams& p) {
  for (auto& [name, t] : p.named()) {
    Tensor tt = t;
    std::fill(tt.mutable_values().begin(), tt.mutable_values().end(), 0.0);
  }
}

// A model whose argmax is <wait> whenever the mask allows it: zero weights
// except an encoder bias that drives positive hidden states, W_c passing the
// context through, and a W_s column pushing the <wait> logit up.
ModelParams wait_greedy_params(int vocab = 8) {
  ModelDims dims{vocab, vocab, 2, 2, 1};
  ModelParams p = ModelParams::init(dims, 0);
  zero_all(p);
  int h = dims.hidden;
  {
    Tensor bias = p.encoder[0].bias;
    auto& b = bias.mutable_values();
    for (int i = 0; i < h; ++i) b[i] = 20.0;           // input gate
    for (int i = 2 * h; i < 3 * h; ++i) b[i] = 20.0;   // candidate
    for (int i = 3 * h; i < 4 * h; ++i) b[i] = 20.0;   // output gate
  }
  {
    Tensor wc = p.attn_combine;  // [2H, H]; context rows only
    auto& w = wc.mutable_values();
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < h; ++c) w[r * h + c] = 1.0;
    }
  }
  {
    Tensor ws = p.out_proj;  // [H, V]
    auto& w = ws.mutable_values();
    for (int r = 0; r < h; ++r) w[r * vocab + kWaitId] = 5.0;
  }
  return p;
}

}  // namespace

TEST_CASE("prefix encoding equals the prefix of the full encoding") {
  set_training_mode(false);
  ModelParams p = small_params(31);
  std::vector<int> src = {5, 6, 7, 8, 9, 10};
  EncoderStates full = encode_prefix(p, src, 6);
  for (int g = 1; g <= 6; ++g) {
    EncoderStates prefix = encode_prefix(p, src, g);
    for (int i = 0; i < g; ++i) {
      CHECK(prefix.top(i).values() == full.top(i).values());  // bit-identical
    }
  }
}

TEST_CASE("extending a prefix matches one-shot encoding") {
  set_training_mode(false);
  ModelParams p = small_params(32);
  std::vector<int> src = {5, 6, 7, 8, 9};
  EncoderStates inc = encode_prefix(p, src, 2);
  encode_extend(p, src, inc, 5);
  EncoderStates full = encode_prefix(p, src, 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(inc.top(i).values() == full.top(i).values());
  }
}

TEST_CASE("encode_prefix rejects out-of-range prefixes") {
  ModelParams p = small_params(33);
  std::vector<int> src = {5, 6, 7};
  CHECK_THROWS_AS(encode_prefix(p, src, 0), Error);
  CHECK_THROWS_AS(encode_prefix(p, src, 4), Error);
}

TEST_CASE("attention weights: single position gets weight one") {
  set_training_mode(false);
  ModelParams p = small_params(34);
  std::vector<int> src = {5, 6, 7};
  EncoderStates enc = encode_prefix(p, src, 1);
  StepResult r = decode_step(p, kBosId, DecoderState::initial(p), enc, 3);
  REQUIRE(r.attn.size() == 1);
  CHECK(r.attn.at(0) == doctest::Approx(1.0));
}

TEST_CASE("attention normalizes and covers exactly the read prefix") {
  set_training_mode(false);
  ModelParams p = small_params(35);
  std::vector<int> src = {5, 6, 7, 8, 9, 10, 11};
  for (int g = 1; g <= 7; ++g) {
    EncoderStates enc = encode_prefix(p, src, g);
    StepResult r = decode_step(p, kBosId, DecoderState::initial(p), enc, 7);
    REQUIRE(r.attn.size() == g);
    double sum = 0.0;
    for (int i = 0; i < g; ++i) sum += r.attn.at(i);
    CHECK(std::fabs(sum - 1.0) < 1e-6);
  }
}

TEST_CASE("dot attention softmax matches the hand-computed two-position case") {
  // d=[1,0], h1=[1,0], h2=[0,1]: scores [1,0] -> [e/(e+1), 1/(e+1)].
  PrecisionGuard f64(Precision::f64);
  Tensor d = Tensor::from_values({1, 2}, {1, 0});
  Tensor mem = Tensor::from_values({2, 2}, {1, 0, 0, 1});
  Tensor alpha = softmax_last(matmul_nt(d, mem));
  double e = std::exp(1.0);
  CHECK(alpha.at(0) == doctest::Approx(e / (e + 1)).epsilon(1e-12));
  CHECK(alpha.at(1) == doctest::Approx(1 / (e + 1)).epsilon(1e-12));
}

TEST_CASE("identical hidden vectors give uniform attention") {
  set_training_mode(false);
  ModelParams p = small_params(36);
  std::vector<int> src = {5, 5, 5, 5};  // same token, same states
  EncoderStates enc = encode_prefix(p, src, 4);
  StepResult r = decode_step(p, kBosId, DecoderState::initial(p), enc, 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(r.attn.at(i) == doctest::Approx(0.25).epsilon(1e-9));
  }
}

TEST_CASE("decoder distributions sum to one and are deterministic") {
  set_training_mode(false);
  ModelParams p = small_params(37);
  std::vector<int> src = {5, 6, 7};
  EncoderStates enc = encode_prefix(p, src, 2);
  StepResult a = decode_step(p, kBosId, DecoderState::initial(p), enc, 3);
  StepResult b = decode_step(p, kBosId, DecoderState::initial(p), enc, 3);
  CHECK(a.log_probs.values() == b.log_probs.values());
  double sum = 0.0;
  for (int i = 0; i < a.log_probs.size(); ++i) sum += std::exp(a.log_probs.at(i));
  CHECK(std::fabs(sum - 1.0) < 1e-6);
}

TEST_CASE("wait probability is exactly zero once the source is exhausted") {
  set_training_mode(false);
  ModelParams p = small_params(38);
  std::vector<int> src = {5, 6, 7};
  EncoderStates enc = encode_prefix(p, src, 3);  // g == I
  StepResult r = decode_step(p, kBosId, DecoderState::initial(p), enc, 3);
  CHECK(std::exp(r.log_probs.at(kWaitId)) == 0.0);
  // Below the cap the wait token keeps positive probability.
  EncoderStates enc2 = encode_prefix(p, src, 2);
  StepResult r2 = decode_step(p, kBosId, DecoderState::initial(p), enc2, 3);
  CHECK(std::exp(r2.log_probs.at(kWaitId)) > 0.0);
}

TEST_CASE("waitk_g follows min(k + j - 1, I)") {
  CHECK(waitk_g(1, 3, 10) == 3);
  CHECK(waitk_g(9, 3, 10) == 10);
  CHECK(waitk_g(1, 5, 4) == 4);
  CHECK_THROWS_AS(waitk_g(0, 3, 10), Error);
}

TEST_CASE("a wait-greedy model waits I-1 times then writes the reference") {
  set_training_mode(false);
  ModelParams p = wait_greedy_params();
  std::vector<int> src = {5, 6, 7, 5};
  std::vector<int> ref = {6, 7, kEosId};
  DecodeTrace trace = rollout_adaptive_train(p, src, ref);

  auto emitted = trace.emissions();
  REQUIRE(emitted.size() == src.size() - 1 + ref.size());
  for (size_t i = 0; i < src.size() - 1; ++i) CHECK(emitted[i] == kWaitId);
  for (size_t j = 0; j < ref.size(); ++j) {
    CHECK(emitted[src.size() - 1 + j] == ref[j]);
  }
  CHECK(trace.waits_before_first_output() ==
        static_cast<int>(src.size()) - 1);
  CHECK(trace.read_count() == static_cast<int>(src.size()));
  // No wait emission at g == I, and the schedule is well-formed.
  for (const auto& s : trace.steps) {
    if (s.action == TraceStep::Action::write && s.token == kWaitId) {
      CHECK(s.g < static_cast<int>(src.size()));
    }
  }
  validate_schedule(trace.write_g_sequence(), trace.source_len);
}

TEST_CASE("a never-wait model keeps g at 1 for every write") {
  set_training_mode(false);
  ModelParams p = small_params(40);
  zero_all(p);  // all logits zero: argmax is PAD, never <wait>
  std::vector<int> src = {5, 6, 7, 8};
  std::vector<int> ref = {6, 7, kEosId};
  DecodeTrace trace = rollout_adaptive_train(p, src, ref);
  CHECK(trace.waits_before_first_output() == 0);
  CHECK(trace.read_count() == 1);
  for (int g : trace.write_g_sequence()) CHECK(g == 1);
}

TEST_CASE("adaptive rollouts always satisfy the schedule invariants") {
  set_training_mode(false);
  std::mt19937_64 rng(55);
  std::uniform_int_distribution<int> len(1, 9), tok(5, 11);
  for (int trial = 0; trial < 10; ++trial) {
    ModelParams p = small_params(1000 + trial);
    std::vector<int> src(len(rng)), ref(len(rng));
    for (int& t : src) t = tok(rng);
    for (int& t : ref) t = tok(rng);
    ref.push_back(kEosId);
    DecodeTrace trace = rollout_adaptive_train(p, src, ref);
    validate_schedule(trace.write_g_sequence(), trace.source_len);
    CHECK(trace.read_count() <= static_cast<int>(src.size()));
    for (const auto& s : trace.steps) {
      if (s.action == TraceStep::Action::write && s.token == kWaitId) {
        CHECK(s.g < static_cast<int>(src.size()));
      }
    }
  }
}

TEST_CASE("wait-k reads exactly min(k, I) source tokens before writing") {
  set_training_mode(false);
  ModelParams p = small_params(41);
  std::vector<int> src = {5, 6, 7, 8, 9, 10};
  for (int k : {1, 3, 5, 9}) {
    DecodeTrace trace = decode_free_fixed(p, src, Mode::waitk, k, 4);
    int reads_before_write = 0;
    for (const auto& s : trace.steps) {
      if (s.action == TraceStep::Action::read) {
        ++reads_before_write;
      } else {
        break;
      }
    }
    CHECK(reads_before_write == std::min<int>(k, src.size()));
    validate_schedule(trace.write_g_sequence(), trace.source_len);
  }
}

TEST_CASE("fixed-schedule decoding never emits the wait token") {
  set_training_mode(false);
  ModelParams p = wait_greedy_params();  // would wait if it could
  std::vector<int> src = {5, 6, 7};
  for (Mode mode : {Mode::waitk, Mode::full_sentence}) {
    DecodeTrace trace = decode_free_fixed(p, src, mode, 2, 5);
    for (int t : trace.emissions()) CHECK(t != kWaitId);
  }
}

TEST_CASE("full-sentence decoding reads everything first") {
  set_training_mode(false);
  ModelParams p = small_params(42);
  std::vector<int> src = {5, 6, 7, 8};
  DecodeTrace trace = decode_free_fixed(p, src, Mode::full_sentence, 0, 5);
  CHECK(trace.read_count() == 4);
  int first_write = -1;
  for (size_t i = 0; i < trace.steps.size(); ++i) {
    if (trace.steps[i].action == TraceStep::Action::write) {
      first_write = static_cast<int>(i);
      break;
    }
  }
  CHECK(first_write == 4);  // all reads precede the first write
}

TEST_CASE("teacher forcing aligns writes with the reference") {
  set_training_mode(false);
  ModelParams p = small_params(43);
  std::vector<int> src = {5, 6, 7, 8, 9};
  std::vector<int> ref = {6, 8, 10, kEosId};
  DecodeTrace trace = teacher_forced_trace(p, src, ref, Mode::waitk, 2);
  CHECK(trace.emissions() == ref);
  auto g = trace.write_g_sequence();
  for (size_t j = 0; j < g.size(); ++j) {
    CHECK(g[j] == waitk_g(static_cast<int>(j) + 1, 2, 5));
  }
  for (const auto& s : trace.steps) {
    if (s.action == TraceStep::Action::write) CHECK(s.log_probs.defined());
  }
}

TEST_CASE("checkpoints round-trip bit-exactly in f32 mode") {
  PrecisionGuard f32(Precision::f32);
  Checkpoint ckpt;
  ckpt.params = small_params(77);
  ckpt.mode = Mode::waitk;
  ckpt.k = 3;
  ckpt.alpha = 0.05;
  ckpt.epoch = 4;
  ckpt.val_loss = 1.25;
  auto dir = std::filesystem::temp_directory_path() / "simulmt_ckpt_test";
  std::filesystem::create_directories(dir);
  std::string path = (dir / "m.ckpt").string();
  save_checkpoint(ckpt, path);
  Checkpoint loaded = load_checkpoint(path);
  CHECK(loaded.mode == Mode::waitk);
  CHECK(loaded.k == 3);
  CHECK(loaded.alpha == doctest::Approx(0.05));
  CHECK(loaded.epoch == 4);
  CHECK(loaded.val_loss == doctest::Approx(1.25));
  auto a = ckpt.params.named();
  auto b = loaded.params.named();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].first == b[i].first);
    CHECK(a[i].second.values() == b[i].second.values());
  }
  std::filesystem::remove_all(dir);
}
