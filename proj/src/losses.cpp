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

#include "losses.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace simulmt {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDelayFloor = 1e-7;
}  // namespace

std::vector<int> collapse_path(const std::vector<int>& path_tokens,
                               int wait_id) {
  std::vector<int> out;
  int prev = std::numeric_limits<int>::min();
  for (int t : path_tokens) {
    if (t != prev) out.push_back(t);
    prev = t;
  }
  std::erase(out, wait_id);
  return out;
}

Tensor sce_masked(const DecodeTrace& trace, const std::vector<int>& reference) {
  std::vector<Tensor> terms;
  size_t ref_pos = 0;
  for (const auto& step : trace.steps) {
    if (step.action != TraceStep::Action::write) continue;
    if (step.token == kWaitId) continue;  // delay steps cost nothing
    if (!step.log_probs.defined()) {
      fail(Error::Code::invalid_argument,
           "sce_masked: trace lacks step distributions (not a training trace)");
    }
    if (ref_pos >= reference.size() || reference[ref_pos] != step.token) {
      fail(Error::Code::invalid_argument,
           "sce_masked: trace write " + std::to_string(step.token) +
               " at output position " + std::to_string(ref_pos) +
               " does not match the reference");
    }
    terms.push_back(gather_last(step.log_probs, {step.token}));
    ++ref_pos;
  }
  if (ref_pos != reference.size()) {
    fail(Error::Code::invalid_argument,
         "sce_masked: trace covers " + std::to_string(ref_pos) + " of " +
             std::to_string(reference.size()) + " reference tokens");
  }
  if (terms.empty()) return Tensor::scalar(0.0);
  return neg(sum_all(concat_last(terms)));
}

// ---- CTC -------------------------------------------------------------------

CtcResult ctc_loss(const std::vector<Tensor>& step_log_probs,
                   const std::vector<int>& reference, int wait_id) {
  int T = static_cast<int>(step_log_probs.size());
  int J = static_cast<int>(reference.size());
  CtcResult result;
  if (T < J) {
    result.loss = Tensor::full({1}, kInf);
    result.feasible = false;
    result.diagnostic = "ctc: T=" + std::to_string(T) + " < J=" +
                        std::to_string(J) + ", no path can emit the reference";
    return result;
  }
  for (const Tensor& p : step_log_probs) {
    if (!p.defined() || p.ndim() != 1) {
      fail(Error::Code::invalid_argument,
           "ctc: step distributions must be 1-D log-probability tensors");
    }
  }

  // Extended labels [w, y1, w, y2, ..., w, yJ, w].
  int L = 2 * J + 1;
  std::vector<int> lprime(L, wait_id);
  for (int j = 0; j < J; ++j) lprime[2 * j + 1] = reference[j];

  // Advance-by-2 is legal only onto a non-wait label different from the one
  // two slots back.
  std::vector<double> allow2(L, -kInf);
  for (int s = 2; s < L; ++s) {
    if (lprime[s] != wait_id && lprime[s] != lprime[s - 2]) allow2[s] = 0.0;
  }
  Tensor allow2_mask = Tensor::from_values({L}, std::move(allow2));

  std::vector<double> init(L, -kInf);
  init[0] = 0.0;
  if (L > 1) init[1] = 0.0;
  Tensor init_mask = Tensor::from_values({L}, std::move(init));

  Tensor alpha = add(gather_last(step_log_probs[0], lprime), init_mask);
  Tensor pad1 = Tensor::full({1}, -kInf);
  Tensor pad2 = Tensor::full({std::min<int64_t>(2, L)}, -kInf);
  for (int t = 1; t < T; ++t) {
    Tensor shift1 =
        L > 1 ? concat_last({pad1, slice_last(alpha, 0, L - 1)}) : pad1;
    Tensor moved = logaddexp(alpha, shift1);
    if (L > 2) {
      Tensor shift2 = concat_last({pad2, slice_last(alpha, 0, L - 2)});
      moved = logaddexp(moved, add(shift2, allow2_mask));
    }
    alpha = add(moved, gather_last(step_log_probs[t], lprime));
  }

  int64_t tail_start = std::max(0, L - 2);
  Tensor tail = slice_last(alpha, tail_start, L - tail_start);
  Tensor log_like = logsumexp_last(tail);
  if (log_like.item() == -kInf) {
    result.loss = Tensor::full({1}, kInf);
    result.feasible = false;
    result.diagnostic =
        "ctc: no length-" + std::to_string(T) +
        " path collapses to the reference (adjacent repeats need a wait slot)";
    return result;
  }
  result.loss = neg(log_like);
  return result;
}

double ctc_bruteforce(const std::vector<std::vector<double>>& step_probs,
                      const std::vector<int>& reference, int wait_id) {
  int T = static_cast<int>(step_probs.size());
  if (T == 0) {
    fail(Error::Code::invalid_argument, "ctc_bruteforce: no steps");
  }
  size_t K = step_probs[0].size();
  double states = std::pow(static_cast<double>(K), T);
  if (states > 1e7) {
    fail(Error::Code::invalid_argument,
         "ctc_bruteforce: " + std::to_string(K) + "^" + std::to_string(T) +
             " paths exceed the 1e7 enumeration bound");
  }
  std::vector<int> path(T, 0);
  double total = 0.0;
  while (true) {
    double p = 1.0;
    for (int t = 0; t < T; ++t) p *= step_probs[t][path[t]];
    if (p > 0.0 && collapse_path(path, wait_id) == reference) total += p;
    int t = T - 1;
    while (t >= 0 && path[t] == static_cast<int>(K) - 1) path[t--] = 0;
    if (t < 0) break;
    ++path[t];
  }
  return total > 0.0 ? -std::log(total) : kInf;
}

double ctc_bruteforce_total_mass(
    const std::vector<std::vector<double>>& step_probs, int wait_id) {
  int T = static_cast<int>(step_probs.size());
  if (T == 0) {
    fail(Error::Code::invalid_argument, "ctc_bruteforce: no steps");
  }
  size_t K = step_probs[0].size();
  double states = std::pow(static_cast<double>(K), T);
  if (states > 1e7) {
    fail(Error::Code::invalid_argument,
         "ctc_bruteforce: enumeration bound exceeded");
  }
  std::map<std::vector<int>, double> mass_by_outcome;
  std::vector<int> path(T, 0);
  while (true) {
    double p = 1.0;
    for (int t = 0; t < T; ++t) p *= step_probs[t][path[t]];
    mass_by_outcome[collapse_path(path, wait_id)] += p;
    int t = T - 1;
    while (t >= 0 && path[t] == static_cast<int>(K) - 1) path[t--] = 0;
    if (t < 0) break;
    ++path[t];
  }
  double total = 0.0;
  for (const auto& [outcome, p] : mass_by_outcome) total += p;
  return total;
}

// ---- delay penalty ---------------------------------------------------------

Tensor delay_penalty(const DecodeTrace& trace) {
  std::vector<Tensor> terms;
  bool have_prev = false;
  int prev_emission = -1;
  for (const auto& step : trace.steps) {
    if (step.action != TraceStep::Action::write) continue;
    bool is_wait = step.token == kWaitId;
    bool is_repeat = have_prev && step.token == prev_emission;
    if (is_wait || is_repeat) {
      if (!step.log_probs.defined()) {
        fail(Error::Code::invalid_argument,
             "delay_penalty: trace lacks step distributions");
      }
      int probed = is_wait ? kWaitId : prev_emission;
      Tensor w = exp_t(gather_last(step.log_probs, {probed}));
      terms.push_back(neg_log_one_minus(w, kDelayFloor));
    }
    prev_emission = step.token;
    have_prev = true;
  }
  if (terms.empty()) return Tensor::scalar(0.0);
  return sum_all(concat_last(terms));
}

Tensor combined_loss(const Tensor& ent, const Tensor& ctc, const Tensor& del,
                     double alpha) {
  if (alpha < 0.0) {
    fail(Error::Code::invalid_argument,
         "combined_loss: alpha must be nonnegative");
  }
  return add(add(ent, ctc), scale(del, alpha));
}

LossBundle adaptive_losses(const DecodeTrace& trace,
                           const std::vector<int>& reference, double alpha) {
  LossBundle bundle;
  bundle.alpha = alpha;
  bundle.ent = sce_masked(trace, reference);

  std::vector<Tensor> step_log_probs;
  for (const auto& step : trace.steps) {
    if (step.action == TraceStep::Action::write) {
      step_log_probs.push_back(step.log_probs);
    }
  }
  CtcResult ctc = ctc_loss(step_log_probs, reference);
  if (ctc.feasible) {
    bundle.ctc = ctc.loss;
  } else {
    // A rollout without enough wait slots can make every path to a reference
    // with adjacent repeats unreachable; drop the term for this sentence
    // rather than aborting on +inf.
    bundle.ctc = Tensor::scalar(0.0);
    bundle.ctc_feasible = false;
    bundle.diagnostic = ctc.diagnostic;
  }
  bundle.del = delay_penalty(trace);
  bundle.total = combined_loss(bundle.ent, bundle.ctc, bundle.del, alpha);
  return bundle;
}

}  // namespace simulmt
