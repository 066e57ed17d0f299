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
#include <random>

#include "doctest.h"
#include "rng.hpp"
#include "tensor.hpp"

using namespace simulmt;

namespace {

struct F64Mode {
  PrecisionGuard guard{Precision::f64};
};

}  // namespace

TEST_CASE("matmul matches hand arithmetic") {
  Tensor a = Tensor::from_values({2, 2}, {1, 2, 3, 4});
  Tensor b = Tensor::from_values({2, 1}, {1, 1});
  Tensor c = matmul(a, b);
  CHECK(c.shape() == Shape{2, 1});
  CHECK(c.at(0) == doctest::Approx(3));
  CHECK(c.at(1) == doctest::Approx(7));
}

TEST_CASE("matmul rejects mismatched shapes with both shapes named") {
  Tensor a = Tensor::from_values({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b = Tensor::from_values({2, 2}, {1, 2, 3, 4});
  try {
    matmul(a, b);
    FAIL("expected an error");
  } catch (const Error& e) {
    std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("[2,3]") != std::string::npos);
    CHECK(msg.find("[2,2]") != std::string::npos);
  }
}

TEST_CASE("softmax of equal logits is uniform") {
  Tensor x = Tensor::from_values({3}, {0, 0, 0});
  Tensor y = softmax_last(x);
  for (int i = 0; i < 3; ++i) CHECK(y.at(i) == doctest::Approx(1.0 / 3));
}

TEST_CASE("softmax rows are nonnegative and normalized") {
  F64Mode f64;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-8.0, 8.0);
  std::vector<double> v(5 * 7);
  for (double& x : v) x = dist(rng);
  Tensor y = softmax_last(Tensor::from_values({5, 7}, v));
  for (int r = 0; r < 5; ++r) {
    double sum = 0.0;
    for (int c = 0; c < 7; ++c) {
      double p = y.at(r * 7 + c);
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(std::fabs(sum - 1.0) < 1e-6);
  }
}

TEST_CASE("logsumexp identity on log probabilities") {
  F64Mode f64;
  Tensor x = Tensor::from_values({2}, {std::log(0.2), std::log(0.3)});
  CHECK(std::fabs(logsumexp_last(x).item() - std::log(0.5)) < 1e-12);
}

TEST_CASE("backward of sum of squares doubles the leaf") {
  F64Mode f64;
  Tensor w = Tensor::from_values({2}, {1, 2}, true);
  backward(sum_all(mul(w, w)));
  CHECK(w.grad()[0] == doctest::Approx(2));
  CHECK(w.grad()[1] == doctest::Approx(4));

  // Repeated backward without reset accumulates.
  backward(sum_all(mul(w, w)));
  CHECK(w.grad()[0] == doctest::Approx(4));
  CHECK(w.grad()[1] == doctest::Approx(8));
}

TEST_CASE("tanh gradient at zero is one") {
  F64Mode f64;
  Tensor x = Tensor::from_values({1}, {0.0}, true);
  backward(sum_all(tanh_t(x)));
  CHECK(x.grad()[0] == doctest::Approx(1.0));
}

TEST_CASE("backward rejects non-scalar losses") {
  Tensor w = Tensor::from_values({2}, {1, 2}, true);
  CHECK_THROWS_AS(backward(mul(w, w)), Error);
}

namespace {

// Random scalar graph over five parameters touching most primitives; used by
// the finite-difference check below.
Tensor five_param_graph(const std::vector<Tensor>& p) {
  Tensor a = matmul(reshape(p[0], {1, 2}), reshape(p[1], {2, 2}));  // [1,2]
  Tensor b = tanh_t(add(a, p[2]));
  Tensor c = sigmoid(mul(b, p[3]));
  Tensor d = concat_last({reshape(c, {2}), exp_t(scale(p[4], 0.3))});
  Tensor e = log_softmax_last(d);
  Tensor f = logsumexp_last(mul(d, d));
  Tensor g = logaddexp(slice_last(e, 0, 2), slice_last(e, 2, 2));
  return add(sum_all(g), f);
}

}  // namespace

TEST_CASE("analytic gradients match central finite differences") {
  F64Mode f64;
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> dist(-0.8, 0.8);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> raw = {
        {dist(rng), dist(rng)},
        {dist(rng), dist(rng), dist(rng), dist(rng)},
        {dist(rng), dist(rng)},
        {dist(rng), dist(rng)},
        {dist(rng), dist(rng)}};
    std::vector<Shape> shapes = {{2}, {4}, {2}, {2}, {2}};

    std::vector<Tensor> leaves;
    for (size_t i = 0; i < raw.size(); ++i) {
      leaves.push_back(Tensor::from_values(shapes[i], raw[i], true));
    }
    backward(five_param_graph(leaves));

    auto value_at = [&](const std::vector<std::vector<double>>& vals) {
      NoGradGuard no_grad;
      std::vector<Tensor> t;
      for (size_t i = 0; i < vals.size(); ++i) {
        t.push_back(Tensor::from_values(shapes[i], vals[i]));
      }
      return five_param_graph(t).item();
    };

    for (size_t i = 0; i < raw.size(); ++i) {
      for (size_t j = 0; j < raw[i].size(); ++j) {
        auto plus = raw, minus = raw;
        plus[i][j] += h;
        minus[i][j] -= h;
        double fd = (value_at(plus) - value_at(minus)) / (2 * h);
        double analytic = leaves[i].grad()[j];
        double rel = std::fabs(analytic - fd) /
                     std::max({1.0, std::fabs(analytic), std::fabs(fd)});
        CHECK(rel < 1e-4);
      }
    }
  }
}

TEST_CASE("forward values are bit-identical across repeated seeded runs") {
  set_training_mode(true);
  auto run = [] {
    seed_dropout(99);
    Tensor x = Tensor::from_values({64}, std::vector<double>(64, 1.0));
    Tensor y = dropout(x, 0.5);
    Tensor z = dropout(y, 0.3);
    return z.values();
  };
  auto a = run();
  auto b = run();
  set_training_mode(false);
  CHECK(a == b);
}

TEST_CASE("dropout is identity outside training mode") {
  set_training_mode(false);
  Tensor x = Tensor::from_values({8}, {1, 2, 3, 4, 5, 6, 7, 8});
  Tensor y = dropout(x, 0.9);
  CHECK(y.values() == x.values());
}

TEST_CASE("dropout rejects probabilities outside [0,1)") {
  Tensor x = Tensor::from_values({2}, {1, 2});
  CHECK_THROWS_AS(dropout(x, 1.0), Error);
  CHECK_THROWS_AS(dropout(x, -0.1), Error);
}

TEST_CASE("mask_index forces exact -inf and zero probability") {
  Tensor logits = Tensor::from_values({1, 4}, {0.3, 0.1, -0.4, 2.0});
  Tensor masked = mask_index(logits, 2);
  Tensor p = softmax_last(masked);
  CHECK(p.at(2) == 0.0);
  double sum = 0.0;
  for (int i = 0; i < 4; ++i) sum += p.at(i);
  CHECK(sum == doctest::Approx(1.0));
}

TEST_CASE("f32 mode quantizes values through float storage") {
  PrecisionGuard f32(Precision::f32);
  double v = 0.1234567890123456789;
  Tensor t = Tensor::from_values({1}, {v});
  CHECK(t.item() == static_cast<double>(static_cast<float>(v)));
  CHECK(t.item() != v);
}

TEST_CASE("embedding lookup gathers rows and scatters gradients") {
  F64Mode f64;
  Tensor table = Tensor::from_values({3, 2}, {1, 2, 3, 4, 5, 6}, true);
  Tensor rows = embedding_lookup(table, {2, 0, 2});
  CHECK(rows.values() == std::vector<double>{5, 6, 1, 2, 5, 6});
  backward(sum_all(rows));
  CHECK(table.grad() == std::vector<double>{1, 1, 0, 0, 2, 2});
}
