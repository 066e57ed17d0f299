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

#ifndef SIMULMT_TENSOR_HPP
#define SIMULMT_TENSOR_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "common.hpp"

namespace simulmt {

using Shape = std::vector<int64_t>;

namespace detail {
struct TensorNode;
}

// Dense row-major tensor with reverse-mode autodiff. The handle is a cheap
// shared reference to the underlying node; ops record the graph whenever any
// input requires a gradient and recording is enabled.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double value);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  int64_t size() const;
  int64_t dim(int axis) const;
  int ndim() const;

  // Scalar extraction; errors unless size() == 1.
  double item() const;
  double at(int64_t flat_index) const;

  const std::vector<double>& values() const;
  // Direct mutation is reserved for leaves (parameter updates). Mutating a
  // node that still participates in a live graph is undefined.
  std::vector<double>& mutable_values();

  bool requires_grad() const;
  bool is_leaf() const;
  const std::vector<double>& grad() const;
  bool has_grad() const;
  void zero_grad();

  detail::TensorNode* node() const { return node_.get(); }

 private:
  friend Tensor make_op_result(Shape shape, std::vector<double> values,
                               std::vector<Tensor> parents,
                               std::function<void(detail::TensorNode&)> backfn);
  explicit Tensor(std::shared_ptr<detail::TensorNode> node)
      : node_(std::move(node)) {}
  std::shared_ptr<detail::TensorNode> node_;
};

namespace detail {
struct TensorNode {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backfn;  // empty for leaves

  int64_t size() const { return static_cast<int64_t>(values.size()); }
  void ensure_grad();
};
}  // namespace detail

// Accumulates d(loss)/d(leaf) into every reachable leaf with requires_grad.
// loss must be a scalar. Repeated calls without zero_grad accumulate.
void backward(const Tensor& loss);

// ---- primitives -----------------------------------------------------------

// [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);
// a [m,k] x b[n,k]^T -> [m,n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);

// Elementwise; b may be same-shape, a single element, or a 1-D vector
// matching a's last extent (bias broadcast).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double c);
Tensor add_const(const Tensor& a, double c);
Tensor neg(const Tensor& a);
Tensor tanh_t(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor log_t(const Tensor& a);
Tensor exp_t(const Tensor& a);
// max(a, c) elementwise; gradient passes only where a > c.
Tensor clamp_min(const Tensor& a, double c);
// -log(max(1-a, floor)). The backward slope 1/(1-a) is capped at 50 so a
// saturated input keeps a pull without monopolizing the clipped batch
// gradient.
Tensor neg_log_one_minus(const Tensor& a, double floor);
// Elementwise log(exp(a)+exp(b)), -inf safe.
Tensor logaddexp(const Tensor& a, const Tensor& b);

Tensor concat_last(const std::vector<Tensor>& parts);
// Stacks equal-shaped [1,n] (or [n]) tensors into [rows,n].
Tensor concat_rows(const std::vector<Tensor>& rows);
Tensor slice_last(const Tensor& a, int64_t start, int64_t len);
// 1-D gather: a[idx[i]] for each i -> [idx.size()]
Tensor gather_last(const Tensor& a, const std::vector<int>& indices);
Tensor reshape(const Tensor& a, Shape shape);
Tensor sum_all(const Tensor& a);

Tensor softmax_last(const Tensor& a);
Tensor log_softmax_last(const Tensor& a);
Tensor logsumexp_last(const Tensor& a);

// table [V,E], ids -> [ids.size(),E]
Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids);

// Inverted dropout keyed by (global dropout seed, call index); identity when
// not in training mode. p in [0,1).
Tensor dropout(const Tensor& a, double p);

// Sets last-axis position `index` to -inf in every row (logit masking).
Tensor mask_index(const Tensor& a, int64_t index);

std::string shape_str(const Shape& s);

}  // namespace simulmt

#endif  // SIMULMT_TENSOR_HPP
