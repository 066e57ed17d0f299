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

#ifndef SIMULMT_ORACLE_HPP
#define SIMULMT_ORACLE_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace simulmt {

// Random CTC instance: T steps, J reference labels, distributions over
// V real tokens plus a wait symbol at id 0.
struct CtcInstance {
  std::vector<std::vector<double>> step_probs;  // T x (V+1), normalized
  std::vector<int> reference;                   // ids in [1, V]
  int wait_id = 0;
};

CtcInstance random_ctc_instance(uint64_t seed, int min_T = 2, int max_T = 6,
                                int min_J = 1, int max_J = 3, int min_V = 2,
                                int max_V = 3);

struct OracleReport {
  int passed = 0;
  int total = 0;
  double max_abs_diff = 0.0;  // equivalence trials
  double max_rel_err = 0.0;   // gradient trials
  double max_mass_dev = 0.0;  // conservation trials
  std::vector<std::string> failures;
  bool ok() const { return passed == total; }
};

// |forward DP - brute force| < 1e-9 on random instances (64-bit mode).
OracleReport ctc_equivalence_trials(int trials, uint64_t seed);

// d(ctc)/d(logits) against central finite differences, h=1e-6, 64-bit;
// per-element relative error (guarded below magnitude 1) must stay < 1e-4.
OracleReport ctc_gradient_trials(int trials, uint64_t seed);

// Path mass summed over every collapsed outcome equals 1 +- 1e-9.
OracleReport conservation_trials(int trials, uint64_t seed);

// CLI-facing aggregate: splits `trials` roughly 1/2 equivalence, 1/4
// gradient, 1/4 conservation so the reported total equals `trials`.
OracleReport run_oracle_checks(int trials, uint64_t seed);

}  // namespace simulmt

#endif  // SIMULMT_ORACLE_HPP
