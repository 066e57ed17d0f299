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

#include "tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "rng.hpp"

namespace simulmt {

namespace {

Precision g_precision = Precision::f32;
bool g_training = false;
thread_local bool t_grad_enabled = true;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

void quantize_inplace(std::vector<double>& v) {
  if (g_precision == Precision::f32) {
    for (double& x : v) x = static_cast<double>(static_cast<float>(x));
  }
}

}  // namespace

Precision precision() { return g_precision; }
void set_precision(Precision p) { g_precision = p; }
bool training_mode() { return g_training; }
void set_training_mode(bool on) { g_training = on; }
bool grad_enabled() { return t_grad_enabled; }
void set_grad_enabled(bool on) { t_grad_enabled = on; }

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) os << ',';
    os << s[i];
  }
  os << ']';
  return os.str();
}

namespace detail {
void TensorNode::ensure_grad() {
  if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
}
}  // namespace detail

using detail::TensorNode;

// ---- Tensor handle ---------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return from_values(std::move(shape), {}, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  int64_t n = shape_numel(shape);
  return from_values(std::move(shape), std::vector<double>(n, value),
                     requires_grad);
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values,
                           bool requires_grad) {
  int64_t n = shape_numel(shape);
  if (values.empty()) values.assign(n, 0.0);
  if (static_cast<int64_t>(values.size()) != n) {
    fail(Error::Code::invalid_argument,
         "tensor: value count " + std::to_string(values.size()) +
             " does not match shape " + shape_str(shape));
  }
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  quantize_inplace(node->values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value) { return from_values({1}, {value}); }

const Shape& Tensor::shape() const { return node_->shape; }
int64_t Tensor::size() const { return node_->size(); }
int64_t Tensor::dim(int axis) const { return node_->shape.at(axis); }
int Tensor::ndim() const { return static_cast<int>(node_->shape.size()); }

double Tensor::item() const {
  if (size() != 1) {
    fail(Error::Code::invalid_argument,
         "item: tensor of shape " + shape_str(shape()) + " is not a scalar");
  }
  return node_->values[0];
}

double Tensor::at(int64_t flat_index) const {
  return node_->values.at(flat_index);
}

const std::vector<double>& Tensor::values() const { return node_->values; }
std::vector<double>& Tensor::mutable_values() { return node_->values; }

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
bool Tensor::is_leaf() const { return node_ && !node_->backfn; }

const std::vector<double>& Tensor::grad() const {
  node_->ensure_grad();
  return node_->grad;
}

bool Tensor::has_grad() const {
  return node_ && node_->grad.size() == node_->values.size();
}

void Tensor::zero_grad() {
  if (node_) node_->grad.assign(node_->values.size(), 0.0);
}

// Central op factory: quantizes in f32 mode and records the graph node when
// recording is on and some input needs gradients.
Tensor make_op_result(Shape shape, std::vector<double> values,
                      std::vector<Tensor> parents,
                      std::function<void(TensorNode&)> backfn) {
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  quantize_inplace(node->values);
  bool track = false;
  if (t_grad_enabled) {
    for (const Tensor& p : parents) track = track || p.requires_grad();
  }
  if (track) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (const Tensor& p : parents) node->parents.push_back(p.node_);
    node->backfn = std::move(backfn);
  }
  return Tensor(std::move(node));
}

// ---- backward --------------------------------------------------------------

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    fail(Error::Code::invalid_argument,
         "backward: loss must be a defined scalar tensor");
  }
  TensorNode* root = loss.node();
  if (!root->requires_grad) return;

  // Iterative post-order over the requires_grad subgraph.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited;
  std::vector<std::pair<TensorNode*, size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorNode* parent = node->parents[next++].get();
      if (parent->requires_grad && !visited.count(parent)) {
        visited.insert(parent);
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior grads are scratch for this call; leaf grads accumulate across
  // calls until zero_grad.
  for (TensorNode* node : order) {
    if (node->backfn) node->grad.assign(node->values.size(), 0.0);
  }
  root->ensure_grad();
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backfn) (*it)->backfn(**it);
  }
}

// ---- raw matrix kernels ----------------------------------------------------

namespace {

// c[m,n] += a[m,k] * b[k,n]
void raw_mm_acc(const double* a, const double* b, double* c, int64_t m,
                int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (int64_t p = 0; p < k; ++p) {
      double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// c[m,n] += a[m,k] * b[n,k]^T
void raw_mm_nt_acc(const double* a, const double* b, double* c, int64_t m,
                   int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (int64_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double acc = 0.0;
      for (int64_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] += acc;
    }
  }
}

// c[k,n] += a[m,k]^T * b[m,n]
void raw_mm_tn_acc(const double* a, const double* b, double* c, int64_t m,
                   int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* brow = b + i * n;
    for (int64_t p = 0; p < k; ++p) {
      double av = arow[p];
      if (av == 0.0) continue;
      double* crow = c + p * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void check_2d(const Tensor& t, const char* op) {
  if (t.ndim() != 2) {
    fail(Error::Code::invalid_argument,
         std::string(op) + ": expected 2-D tensor, got " +
             shape_str(t.shape()));
  }
}

void accumulate(TensorNode* node, const std::vector<double>& delta) {
  if (!node->requires_grad) return;
  node->ensure_grad();
  for (size_t i = 0; i < delta.size(); ++i) node->grad[i] += delta[i];
}

}  // namespace

// ---- matmul ----------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_2d(a, "matmul");
  check_2d(b, "matmul");
  if (a.dim(1) != b.dim(0)) {
    fail(Error::Code::invalid_argument,
         "matmul: inner extents differ, " + shape_str(a.shape()) + " x " +
             shape_str(b.shape()));
  }
  int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n, 0.0);
  raw_mm_acc(a.values().data(), b.values().data(), out.data(), m, k, n);
  return make_op_result({m, n}, std::move(out), {a, b},
                        [m, k, n](TensorNode& o) {
                          TensorNode* pa = o.parents[0].get();
                          TensorNode* pb = o.parents[1].get();
                          if (pa->requires_grad) {
                            std::vector<double> da(m * k, 0.0);
                            raw_mm_nt_acc(o.grad.data(), pb->values.data(),
                                          da.data(), m, n, k);
                            accumulate(pa, da);
                          }
                          if (pb->requires_grad) {
                            std::vector<double> db(k * n, 0.0);
                            raw_mm_tn_acc(pa->values.data(), o.grad.data(),
                                          db.data(), m, k, n);
                            accumulate(pb, db);
                          }
                        });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  check_2d(a, "matmul_nt");
  check_2d(b, "matmul_nt");
  if (a.dim(1) != b.dim(1)) {
    fail(Error::Code::invalid_argument,
         "matmul_nt: inner extents differ, " + shape_str(a.shape()) + " x " +
             shape_str(b.shape()) + "^T");
  }
  int64_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  std::vector<double> out(m * n, 0.0);
  raw_mm_nt_acc(a.values().data(), b.values().data(), out.data(), m, k, n);
  return make_op_result({m, n}, std::move(out), {a, b},
                        [m, k, n](TensorNode& o) {
                          TensorNode* pa = o.parents[0].get();
                          TensorNode* pb = o.parents[1].get();
                          if (pa->requires_grad) {
                            std::vector<double> da(m * k, 0.0);
                            raw_mm_acc(o.grad.data(), pb->values.data(),
                                       da.data(), m, n, k);
                            accumulate(pa, da);
                          }
                          if (pb->requires_grad) {
                            std::vector<double> db(n * k, 0.0);
                            raw_mm_tn_acc(o.grad.data(), pa->values.data(),
                                          db.data(), m, n, k);
                            accumulate(pb, db);
                          }
                        });
}

// ---- elementwise with bias/scalar broadcast on the second operand ----------

namespace {

enum class Bcast { same, scalar, bias };

Bcast resolve_bcast(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Bcast::same;
  if (b.size() == 1) return Bcast::scalar;
  if (b.ndim() == 1 && a.ndim() >= 1 && a.dim(a.ndim() - 1) == b.dim(0)) {
    return Bcast::bias;
  }
  fail(Error::Code::invalid_argument,
       std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
           shape_str(b.shape()));
}

int64_t bcast_index(Bcast mode, int64_t i, int64_t last) {
  switch (mode) {
    case Bcast::same:
      return i;
    case Bcast::scalar:
      return 0;
    case Bcast::bias:
      return i % last;
  }
  return 0;
}

template <class Fwd, class BackA, class BackB>
Tensor binary_ew(const Tensor& a, const Tensor& b, const char* op, Fwd fwd,
                 BackA back_a, BackB back_b) {
  Bcast mode = resolve_bcast(a, b, op);
  int64_t n = a.size();
  int64_t last = a.ndim() ? a.dim(a.ndim() - 1) : 1;
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(n);
  for (int64_t i = 0; i < n; ++i) {
    out[i] = fwd(av[i], bv[bcast_index(mode, i, last)]);
  }
  return make_op_result(
      a.shape(), std::move(out), {a, b},
      [mode, n, last, back_a, back_b](TensorNode& o) {
        TensorNode* pa = o.parents[0].get();
        TensorNode* pb = o.parents[1].get();
        if (pa->requires_grad) {
          pa->ensure_grad();
          for (int64_t i = 0; i < n; ++i) {
            int64_t j = bcast_index(mode, i, last);
            pa->grad[i] +=
                o.grad[i] * back_a(pa->values[i], pb->values[j], o.values[i]);
          }
        }
        if (pb->requires_grad) {
          pb->ensure_grad();
          for (int64_t i = 0; i < n; ++i) {
            int64_t j = bcast_index(mode, i, last);
            pb->grad[j] +=
                o.grad[i] * back_b(pa->values[i], pb->values[j], o.values[i]);
          }
        }
      });
}

template <class Fwd, class Back>
Tensor unary_ew(const Tensor& a, Fwd fwd, Back back) {
  int64_t n = a.size();
  const auto& av = a.values();
  std::vector<double> out(n);
  for (int64_t i = 0; i < n; ++i) out[i] = fwd(av[i]);
  return make_op_result(a.shape(), std::move(out), {a},
                        [n, back](TensorNode& o) {
                          TensorNode* pa = o.parents[0].get();
                          if (!pa->requires_grad) return;
                          pa->ensure_grad();
                          for (int64_t i = 0; i < n; ++i) {
                            pa->grad[i] +=
                                o.grad[i] * back(pa->values[i], o.values[i]);
                          }
                        });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_ew(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double, double) { return 1.0; },
      [](double, double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_ew(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double, double) { return 1.0; },
      [](double, double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_ew(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double, double y, double) { return y; },
      [](double x, double, double) { return x; });
}

Tensor scale(const Tensor& a, double c) {
  return unary_ew(
      a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Tensor add_const(const Tensor& a, double c) {
  return unary_ew(
      a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor tanh_t(const Tensor& a) {
  return unary_ew(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary_ew(
      a,
      [](double x) {
        return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                      : std::exp(x) / (1.0 + std::exp(x));
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor log_t(const Tensor& a) {
  return unary_ew(
      a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Tensor exp_t(const Tensor& a) {
  return unary_ew(
      a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Tensor clamp_min(const Tensor& a, double c) {
  return unary_ew(
      a, [c](double x) { return x < c ? c : x; },
      [c](double x, double) { return x > c ? 1.0 : 0.0; });
}

Tensor neg_log_one_minus(const Tensor& a, double floor) {
  return unary_ew(
      a,
      [floor](double x) { return -std::log(std::max(1.0 - x, floor)); },
      [](double x, double) {
        return std::min(1.0 / std::max(1.0 - x, 1e-12), 50.0);
      });
}

Tensor logaddexp(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    fail(Error::Code::invalid_argument,
         "logaddexp: shape mismatch " + shape_str(a.shape()) + " vs " +
             shape_str(b.shape()));
  }
  auto lae = [](double x, double y) {
    if (x == kNegInf) return y;
    if (y == kNegInf) return x;
    double m = std::max(x, y);
    return m + std::log1p(std::exp(-std::fabs(x - y)));
  };
  // Weights vanish for -inf inputs and when the whole cell is unreachable.
  auto weight = [](double x, double out) {
    if (x == kNegInf || out == kNegInf) return 0.0;
    return std::exp(x - out);
  };
  return binary_ew(
      a, b, "logaddexp", lae,
      [weight](double x, double, double o) { return weight(x, o); },
      [weight](double, double y, double o) { return weight(y, o); });
}

// ---- structure ops ---------------------------------------------------------

Tensor concat_last(const std::vector<Tensor>& parts) {
  if (parts.empty()) {
    fail(Error::Code::invalid_argument, "concat_last: no inputs");
  }
  const Shape& head = parts[0].shape();
  int nd = parts[0].ndim();
  int64_t rows = 1;
  for (int i = 0; i + 1 < nd; ++i) rows *= head[i];
  int64_t total_last = 0;
  for (const Tensor& t : parts) {
    if (t.ndim() != nd) {
      fail(Error::Code::invalid_argument,
           "concat_last: rank mismatch " + shape_str(head) + " vs " +
               shape_str(t.shape()));
    }
    for (int i = 0; i + 1 < nd; ++i) {
      if (t.dim(i) != head[i]) {
        fail(Error::Code::invalid_argument,
             "concat_last: leading extent mismatch " + shape_str(head) +
                 " vs " + shape_str(t.shape()));
      }
    }
    total_last += t.dim(nd - 1);
  }
  Shape out_shape = head;
  out_shape[nd - 1] = total_last;
  std::vector<double> out(rows * total_last);
  std::vector<int64_t> lens;
  int64_t off = 0;
  for (const Tensor& t : parts) {
    int64_t len = t.dim(nd - 1);
    lens.push_back(len);
    const auto& v = t.values();
    for (int64_t r = 0; r < rows; ++r) {
      std::copy(v.begin() + r * len, v.begin() + (r + 1) * len,
                out.begin() + r * total_last + off);
    }
    off += len;
  }
  return make_op_result(out_shape, std::move(out), parts,
                        [rows, total_last, lens](TensorNode& o) {
                          int64_t off = 0;
                          for (size_t p = 0; p < o.parents.size(); ++p) {
                            TensorNode* pp = o.parents[p].get();
                            int64_t len = lens[p];
                            if (pp->requires_grad) {
                              pp->ensure_grad();
                              for (int64_t r = 0; r < rows; ++r) {
                                for (int64_t j = 0; j < len; ++j) {
                                  pp->grad[r * len + j] +=
                                      o.grad[r * total_last + off + j];
                                }
                              }
                            }
                            off += len;
                          }
                        });
}

Tensor concat_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) {
    fail(Error::Code::invalid_argument, "concat_rows: no inputs");
  }
  int64_t n = rows[0].size();
  std::vector<double> out;
  out.reserve(rows.size() * n);
  for (const Tensor& r : rows) {
    if (r.size() != n) {
      fail(Error::Code::invalid_argument,
           "concat_rows: row width mismatch " + shape_str(rows[0].shape()) +
               " vs " + shape_str(r.shape()));
    }
    out.insert(out.end(), r.values().begin(), r.values().end());
  }
  int64_t m = static_cast<int64_t>(rows.size());
  return make_op_result({m, n}, std::move(out), rows, [n](TensorNode& o) {
    for (size_t p = 0; p < o.parents.size(); ++p) {
      TensorNode* pp = o.parents[p].get();
      if (!pp->requires_grad) continue;
      pp->ensure_grad();
      for (int64_t j = 0; j < n; ++j) {
        pp->grad[j] += o.grad[static_cast<int64_t>(p) * n + j];
      }
    }
  });
}

Tensor slice_last(const Tensor& a, int64_t start, int64_t len) {
  int nd = a.ndim();
  int64_t last = a.dim(nd - 1);
  if (start < 0 || len < 0 || start + len > last) {
    fail(Error::Code::invalid_argument,
         "slice_last: range [" + std::to_string(start) + "," +
             std::to_string(start + len) + ") outside " +
             shape_str(a.shape()));
  }
  int64_t rows = a.size() / last;
  Shape out_shape = a.shape();
  out_shape[nd - 1] = len;
  std::vector<double> out(rows * len);
  const auto& v = a.values();
  for (int64_t r = 0; r < rows; ++r) {
    std::copy(v.begin() + r * last + start, v.begin() + r * last + start + len,
              out.begin() + r * len);
  }
  return make_op_result(out_shape, std::move(out), {a},
                        [rows, last, start, len](TensorNode& o) {
                          TensorNode* pa = o.parents[0].get();
                          if (!pa->requires_grad) return;
                          pa->ensure_grad();
                          for (int64_t r = 0; r < rows; ++r) {
                            for (int64_t j = 0; j < len; ++j) {
                              pa->grad[r * last + start + j] +=
                                  o.grad[r * len + j];
                            }
                          }
                        });
}

Tensor gather_last(const Tensor& a, const std::vector<int>& indices) {
  if (a.ndim() != 1) {
    fail(Error::Code::invalid_argument,
         "gather_last: expected 1-D tensor, got " + shape_str(a.shape()));
  }
  int64_t n = a.size();
  std::vector<double> out(indices.size());
  for (size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= n) {
      fail(Error::Code::invalid_argument,
           "gather_last: index " + std::to_string(indices[i]) +
               " outside " + shape_str(a.shape()));
    }
    out[i] = a.values()[indices[i]];
  }
  auto idx = indices;
  return make_op_result({static_cast<int64_t>(indices.size())},
                        std::move(out), {a}, [idx](TensorNode& o) {
                          TensorNode* pa = o.parents[0].get();
                          if (!pa->requires_grad) return;
                          pa->ensure_grad();
                          for (size_t i = 0; i < idx.size(); ++i) {
                            pa->grad[idx[i]] += o.grad[i];
                          }
                        });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.size()) {
    fail(Error::Code::invalid_argument,
         "reshape: cannot view " + shape_str(a.shape()) + " as " +
             shape_str(shape));
  }
  std::vector<double> out = a.values();
  return make_op_result(std::move(shape), std::move(out), {a},
                        [](TensorNode& o) {
                          TensorNode* pa = o.parents[0].get();
                          accumulate(pa, o.grad);
                        });
}

Tensor sum_all(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return make_op_result({1}, {s}, {a}, [](TensorNode& o) {
    TensorNode* pa = o.parents[0].get();
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    for (double& g : pa->grad) g += o.grad[0];
  });
}

// ---- softmax family --------------------------------------------------------

namespace {
struct RowView {
  int64_t rows;
  int64_t cols;
};

RowView last_axis_rows(const Tensor& a) {
  int64_t cols = a.dim(a.ndim() - 1);
  return {a.size() / cols, cols};
}
}  // namespace

Tensor softmax_last(const Tensor& a) {
  auto [rows, cols] = last_axis_rows(a);
  const auto& v = a.values();
  std::vector<double> out(a.size());
  for (int64_t r = 0; r < rows; ++r) {
    const double* x = v.data() + r * cols;
    double* y = out.data() + r * cols;
    double m = x[0];
    for (int64_t j = 1; j < cols; ++j) m = std::max(m, x[j]);
    double z = 0.0;
    for (int64_t j = 0; j < cols; ++j) {
      y[j] = std::exp(x[j] - m);
      z += y[j];
    }
    for (int64_t j = 0; j < cols; ++j) y[j] /= z;
  }
  return make_op_result(a.shape(), std::move(out), {a},
                        [rows, cols](TensorNode& o) {
                          TensorNode* pa = o.parents[0].get();
                          if (!pa->requires_grad) return;
                          pa->ensure_grad();
                          for (int64_t r = 0; r < rows; ++r) {
                            const double* y = o.values.data() + r * cols;
                            const double* dy = o.grad.data() + r * cols;
                            double dot = 0.0;
                            for (int64_t j = 0; j < cols; ++j)
                              dot += y[j] * dy[j];
                            double* dx = pa->grad.data() + r * cols;
                            for (int64_t j = 0; j < cols; ++j)
                              dx[j] += y[j] * (dy[j] - dot);
                          }
                        });
}

Tensor log_softmax_last(const Tensor& a) {
  auto [rows, cols] = last_axis_rows(a);
  const auto& v = a.values();
  std::vector<double> out(a.size());
  for (int64_t r = 0; r < rows; ++r) {
    const double* x = v.data() + r * cols;
    double* y = out.data() + r * cols;
    double m = kNegInf;
    for (int64_t j = 0; j < cols; ++j) m = std::max(m, x[j]);
    double z = 0.0;
    for (int64_t j = 0; j < cols; ++j) z += std::exp(x[j] - m);
    double lse = m + std::log(z);
    for (int64_t j = 0; j < cols; ++j) {
      y[j] = x[j] == kNegInf ? kNegInf : x[j] - lse;
    }
  }
  return make_op_result(a.shape(), std::move(out), {a},
                        [rows, cols](TensorNode& o) {
                          TensorNode* pa = o.parents[0].get();
                          if (!pa->requires_grad) return;
                          pa->ensure_grad();
                          for (int64_t r = 0; r < rows; ++r) {
                            const double* y = o.values.data() + r * cols;
                            const double* dy = o.grad.data() + r * cols;
                            double total = 0.0;
                            for (int64_t j = 0; j < cols; ++j) total += dy[j];
                            double* dx = pa->grad.data() + r * cols;
                            for (int64_t j = 0; j < cols; ++j) {
                              double p = y[j] == kNegInf ? 0.0 : std::exp(y[j]);
                              dx[j] += dy[j] - p * total;
                            }
                          }
                        });
}

Tensor logsumexp_last(const Tensor& a) {
  auto [rows, cols] = last_axis_rows(a);
  const auto& v = a.values();
  std::vector<double> out(rows);
  for (int64_t r = 0; r < rows; ++r) {
    const double* x = v.data() + r * cols;
    double m = kNegInf;
    for (int64_t j = 0; j < cols; ++j) m = std::max(m, x[j]);
    if (m == kNegInf) {
      out[r] = kNegInf;
      continue;
    }
    double z = 0.0;
    for (int64_t j = 0; j < cols; ++j) z += std::exp(x[j] - m);
    out[r] = m + std::log(z);
  }
  Shape out_shape(a.shape().begin(), a.shape().end() - 1);
  if (out_shape.empty()) out_shape = {1};
  return make_op_result(out_shape, std::move(out), {a},
                        [rows, cols](TensorNode& o) {
                          TensorNode* pa = o.parents[0].get();
                          if (!pa->requires_grad) return;
                          pa->ensure_grad();
                          for (int64_t r = 0; r < rows; ++r) {
                            double lse = o.values[r];
                            if (lse == kNegInf) continue;
                            const double* x = pa->values.data() + r * cols;
                            double* dx = pa->grad.data() + r * cols;
                            for (int64_t j = 0; j < cols; ++j) {
                              if (x[j] == kNegInf) continue;
                              dx[j] += o.grad[r] * std::exp(x[j] - lse);
                            }
                          }
                        });
}

// ---- embedding, dropout, masking -------------------------------------------

Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids) {
  check_2d(table, "embedding_lookup");
  int64_t vocab = table.dim(0), width = table.dim(1);
  std::vector<double> out(ids.size() * width);
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= vocab) {
      fail(Error::Code::invalid_argument,
           "embedding_lookup: id " + std::to_string(ids[i]) + " outside " +
               shape_str(table.shape()));
    }
    const auto& v = table.values();
    std::copy(v.begin() + ids[i] * width, v.begin() + (ids[i] + 1) * width,
              out.begin() + static_cast<int64_t>(i) * width);
  }
  auto idx = ids;
  return make_op_result({static_cast<int64_t>(ids.size()), width},
                        std::move(out), {table}, [idx, width](TensorNode& o) {
                          TensorNode* pt = o.parents[0].get();
                          if (!pt->requires_grad) return;
                          pt->ensure_grad();
                          for (size_t i = 0; i < idx.size(); ++i) {
                            for (int64_t j = 0; j < width; ++j) {
                              pt->grad[idx[i] * width + j] +=
                                  o.grad[static_cast<int64_t>(i) * width + j];
                            }
                          }
                        });
}

Tensor dropout(const Tensor& a, double p) {
  if (p < 0.0 || p >= 1.0) {
    fail(Error::Code::invalid_argument,
         "dropout: probability " + std::to_string(p) + " outside [0,1)");
  }
  if (!training_mode() || p == 0.0) return a;
  uint64_t call = next_dropout_call();
  uint64_t seed = dropout_seed();
  int64_t n = a.size();
  double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(n);
  for (int64_t i = 0; i < n; ++i) {
    mask[i] =
        counter_uniform(seed, call, static_cast<uint64_t>(i)) < p ? 0.0
                                                                  : keep_scale;
  }
  std::vector<double> out(n);
  for (int64_t i = 0; i < n; ++i) out[i] = a.values()[i] * mask[i];
  return make_op_result(a.shape(), std::move(out), {a},
                        [mask = std::move(mask), n](TensorNode& o) {
                          TensorNode* pa = o.parents[0].get();
                          if (!pa->requires_grad) return;
                          pa->ensure_grad();
                          for (int64_t i = 0; i < n; ++i) {
                            pa->grad[i] += o.grad[i] * mask[i];
                          }
                        });
}

Tensor mask_index(const Tensor& a, int64_t index) {
  auto [rows, cols] = last_axis_rows(a);
  if (index < 0 || index >= cols) {
    fail(Error::Code::invalid_argument,
         "mask_index: index " + std::to_string(index) + " outside " +
             shape_str(a.shape()));
  }
  std::vector<double> out = a.values();
  for (int64_t r = 0; r < rows; ++r) out[r * cols + index] = kNegInf;
  return make_op_result(a.shape(), std::move(out), {a},
                        [rows, cols, index](TensorNode& o) {
                          TensorNode* pa = o.parents[0].get();
                          if (!pa->requires_grad) return;
                          pa->ensure_grad();
                          for (int64_t r = 0; r < rows; ++r) {
                            for (int64_t j = 0; j < cols; ++j) {
                              if (j == index) continue;
                              pa->grad[r * cols + j] += o.grad[r * cols + j];
                            }
                          }
                        });
}

}  // namespace simulmt
