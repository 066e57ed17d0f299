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

#ifndef SIMULMT_LOSSES_HPP
#define SIMULMT_LOSSES_HPP

#include <string>
#include <vector>

#include "model.hpp"
#include "tensor.hpp"

namespace simulmt {

// Merges adjacent repeated tokens, then deletes <wait>. The order matters:
// a reference with a genuine adjacent repeat stays reachable through an
// interleaved <wait>.
std::vector<int> collapse_path(const std::vector<int>& path_tokens,
                               int wait_id = kWaitId);

// Token-level cross entropy over the trace's real write steps; <wait>
// emissions contribute exactly zero. The trace's non-wait writes must equal
// the reference sequence.
Tensor sce_masked(const DecodeTrace& trace, const std::vector<int>& reference);

struct CtcResult {
  Tensor loss;       // scalar; +inf when no path exists
  bool feasible = true;
  std::string diagnostic;
};

// -log sum over all length-T paths collapsing to the reference, computed by
// the log-space forward recursion over the extended label sequence
// [w, y1, w, y2, ..., w, yJ, w]. Gradients flow through the recursion.
CtcResult ctc_loss(const std::vector<Tensor>& step_log_probs,
                   const std::vector<int>& reference, int wait_id = kWaitId);

// Exhaustive oracle for ctc_loss: enumerates every length-T path and sums the
// probability of those whose collapse equals the reference. Guarded to
// K^T <= 10^7 states.
double ctc_bruteforce(const std::vector<std::vector<double>>& step_probs,
                      const std::vector<int>& reference, int wait_id = kWaitId);

// Total path probability per collapsed outcome; used by the probability-
// conservation check. Returns the sum over all outcomes (should be 1).
double ctc_bruteforce_total_mass(
    const std::vector<std::vector<double>>& step_probs, int wait_id = kWaitId);

// -sum log(1 - w_t) over delaying steps: w_t is P(<wait>) where the step
// emitted <wait>, P(previous emission) where the step repeats it, else 0.
// 1 - w_t is floored at 1e-7.
Tensor delay_penalty(const DecodeTrace& trace);

struct LossBundle {
  Tensor ent;
  Tensor ctc;
  Tensor del;
  double alpha = 0.0;
  Tensor total;
  bool ctc_feasible = true;
  std::string diagnostic;
};

Tensor combined_loss(const Tensor& ent, const Tensor& ctc, const Tensor& del,
                     double alpha);

// Convenience: all three terms plus the combination over one training trace.
LossBundle adaptive_losses(const DecodeTrace& trace,
                           const std::vector<int>& reference, double alpha);

}  // namespace simulmt

#endif  // SIMULMT_LOSSES_HPP
