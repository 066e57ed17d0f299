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

#include "oracle.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "losses.hpp"
#include "tensor.hpp"

namespace simulmt {

CtcInstance random_ctc_instance(uint64_t seed, int min_T, int max_T, int min_J,
                                int max_J, int min_V, int max_V) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  CtcInstance inst;
  int T = pick(min_T, max_T);
  int V = pick(min_V, max_V);
  int J = pick(min_J, std::min(max_J, T));
  std::uniform_real_distribution<double> mass(0.05, 1.0);
  inst.step_probs.assign(T, std::vector<double>(V + 1));
  for (auto& row : inst.step_probs) {
    double z = 0.0;
    for (double& p : row) {
      p = mass(rng);
      z += p;
    }
    for (double& p : row) p /= z;
  }
  inst.reference.resize(J);
  for (int& y : inst.reference) y = pick(1, V);
  return inst;
}

namespace {

std::vector<Tensor> log_prob_tensors(
    const std::vector<std::vector<double>>& step_probs) {
  std::vector<Tensor> out;
  out.reserve(step_probs.size());
  for (const auto& row : step_probs) {
    std::vector<double> logs(row.size());
    for (size_t i = 0; i < row.size(); ++i) logs[i] = std::log(row[i]);
    out.push_back(
        Tensor::from_values({static_cast<int64_t>(row.size())}, logs));
  }
  return out;
}

}  // namespace

OracleReport ctc_equivalence_trials(int trials, uint64_t seed) {
  PrecisionGuard f64(Precision::f64);
  OracleReport report;
  report.total = trials;
  for (int t = 0; t < trials; ++t) {
    CtcInstance inst = random_ctc_instance(seed + 1000003ULL * t);
    double brute = ctc_bruteforce(inst.step_probs, inst.reference,
                                  inst.wait_id);
    CtcResult dp = ctc_loss(log_prob_tensors(inst.step_probs), inst.reference,
                            inst.wait_id);
    double dp_value = dp.loss.item();
    bool both_inf = std::isinf(brute) && std::isinf(dp_value);
    double diff = both_inf ? 0.0 : std::fabs(dp_value - brute);
    if (both_inf || diff < 1e-9) {
      ++report.passed;
      report.max_abs_diff = std::max(report.max_abs_diff, diff);
    } else {
      std::ostringstream os;
      os << "equivalence trial " << t << ": dp=" << dp_value
         << " brute=" << brute << " diff=" << diff;
      report.failures.push_back(os.str());
    }
  }
  return report;
}

OracleReport ctc_gradient_trials(int trials, uint64_t seed) {
  PrecisionGuard f64(Precision::f64);
  OracleReport report;
  report.total = trials;
  const double h = 1e-6;
  for (int t = 0; t < trials; ++t) {
    // Skip instances with no feasible path; nothing to differentiate there.
    CtcInstance inst;
    uint64_t draw = seed + 2000029ULL * t;
    for (int attempt = 0; attempt < 64; ++attempt) {
      inst = random_ctc_instance(draw + attempt);
      if (std::isfinite(
              ctc_bruteforce(inst.step_probs, inst.reference, inst.wait_id))) {
        break;
      }
    }
    int T = static_cast<int>(inst.step_probs.size());
    int K = static_cast<int>(inst.step_probs[0].size());

    // Parameterize through raw logits so the check covers log_softmax too.
    std::vector<std::vector<double>> logits(T, std::vector<double>(K));
    for (int s = 0; s < T; ++s) {
      for (int j = 0; j < K; ++j) logits[s][j] = std::log(inst.step_probs[s][j]);
    }

    auto loss_value = [&](const std::vector<std::vector<double>>& raw) {
      NoGradGuard no_grad;
      std::vector<Tensor> lp;
      for (int s = 0; s < T; ++s) {
        Tensor z = Tensor::from_values({K}, raw[s]);
        lp.push_back(log_softmax_last(z));
      }
      return ctc_loss(lp, inst.reference, inst.wait_id).loss.item();
    };

    std::vector<Tensor> leaves;
    std::vector<Tensor> lp;
    for (int s = 0; s < T; ++s) {
      Tensor z = Tensor::from_values({K}, logits[s], true);
      leaves.push_back(z);
      lp.push_back(log_softmax_last(z));
    }
    CtcResult dp = ctc_loss(lp, inst.reference, inst.wait_id);
    backward(dp.loss);

    double worst = 0.0;
    for (int s = 0; s < T; ++s) {
      for (int j = 0; j < K; ++j) {
        auto plus = logits, minus = logits;
        plus[s][j] += h;
        minus[s][j] -= h;
        double fd = (loss_value(plus) - loss_value(minus)) / (2.0 * h);
        double analytic = leaves[s].grad()[j];
        double denom = std::max({1.0, std::fabs(fd), std::fabs(analytic)});
        worst = std::max(worst, std::fabs(analytic - fd) / denom);
      }
    }
    report.max_rel_err = std::max(report.max_rel_err, worst);
    if (worst < 1e-4) {
      ++report.passed;
    } else {
      std::ostringstream os;
      os << "gradient trial " << t << ": max rel err " << worst;
      report.failures.push_back(os.str());
    }
  }
  return report;
}

OracleReport conservation_trials(int trials, uint64_t seed) {
  PrecisionGuard f64(Precision::f64);
  OracleReport report;
  report.total = trials;
  for (int t = 0; t < trials; ++t) {
    CtcInstance inst = random_ctc_instance(seed + 3000017ULL * t);
    double mass = ctc_bruteforce_total_mass(inst.step_probs, inst.wait_id);
    double dev = std::fabs(mass - 1.0);
    report.max_mass_dev = std::max(report.max_mass_dev, dev);
    if (dev < 1e-9) {
      ++report.passed;
    } else {
      std::ostringstream os;
      os << "conservation trial " << t << ": total mass " << mass;
      report.failures.push_back(os.str());
    }
  }
  return report;
}

OracleReport run_oracle_checks(int trials, uint64_t seed) {
  if (trials < 1) {
    fail(Error::Code::invalid_argument, "oracle-check: trials must be >= 1");
  }
  int grad = trials / 4;
  int cons = trials / 4;
  int equiv = trials - grad - cons;
  OracleReport all;
  for (OracleReport part :
       {ctc_equivalence_trials(equiv, seed),
        grad > 0 ? ctc_gradient_trials(grad, seed + 17) : OracleReport{},
        cons > 0 ? conservation_trials(cons, seed + 29) : OracleReport{}}) {
    all.passed += part.passed;
    all.total += part.total;
    all.max_abs_diff = std::max(all.max_abs_diff, part.max_abs_diff);
    all.max_rel_err = std::max(all.max_rel_err, part.max_rel_err);
    all.max_mass_dev = std::max(all.max_mass_dev, part.max_mass_dev);
    all.failures.insert(all.failures.end(), part.failures.begin(),
                        part.failures.end());
  }
  return all;
}

}  // namespace simulmt
