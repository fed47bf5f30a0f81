#include "tsg/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "tsg/kernels.hpp"
#include "tsg/params.hpp"

namespace tsg {

namespace {

using Node = Value::Node;
using NodePtr = std::shared_ptr<Node>;

NodePtr make_node(Tensor value, const char* op, std::vector<NodePtr> inputs,
                  std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op = op;
  for (const auto& in : inputs) {
    if (in->tracked) n->tracked = true;
  }
  n->inputs = std::move(inputs);
  if (n->tracked) n->backprop = std::move(backprop);
  return n;
}

void require_rank(const Value& v, int rank, const char* op) {
  if (v.tensor().rank() != rank)
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         ", got shape " + v.tensor().shape_str());
}

// Accumulate g into input i's grad if it is tracked.
void acc(Node& self, std::size_t i, const double* g, int n) {
  Node& in = *self.inputs[i];
  if (!in.tracked) return;
  kernels::axpy(1.0, g, in.ensure_grad().data(), n);
}

}  // namespace

Value Value::constant(Tensor t) {
  auto n = std::make_shared<Node>();
  n->value = std::move(t);
  n->op = "const";
  return Value(std::move(n));
}

Value Value::variable(Tensor t) {
  auto n = std::make_shared<Node>();
  n->value = std::move(t);
  n->op = "var";
  n->tracked = true;
  return Value(std::move(n));
}

Value Value::param(Parameter& p, bool track) {
  auto n = std::make_shared<Node>();
  n->value = p.value;
  n->op = "param";
  if (track && !p.frozen) {
    n->tracked = true;
    n->param = &p;
  }
  return Value(std::move(n));
}

std::span<const double> Value::grad() const {
  return {node_->grad.data(), node_->grad.size()};
}

void backward(const Value& root) {
  if (!root) throw ContractError("backward: empty value");
  if (root.numel() != 1) throw ContractError("backward: root must be scalar, got " + root.tensor().shape_str());
  if (!root.tracked()) throw ContractError("backward: graph has no tracked leaves");

  // Iterative post-order DFS; sequence graphs get deep enough that recursion
  // is not an option.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  struct Frame {
    Node* node;
    std::size_t next_child;
  };
  std::vector<Frame> stack{{root.node().get(), 0}};
  seen.insert(root.node().get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_child < f.node->inputs.size()) {
      Node* child = f.node->inputs[f.next_child++].get();
      if (child->tracked && seen.insert(child).second) stack.push_back({child, 0});
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  root.node()->ensure_grad()[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->grad.empty()) continue;  // nothing flowed here
    if (n->backprop) n->backprop(*n);
    if (n->param) {
      kernels::axpy(1.0, n->grad.data(), n->param->grad.data(), n->value.numel());
    }
  }
}

// ------------------------------------------------------------------- ops --

Value matmul(const Value& a, const Value& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const int m = a.shape()[0], n = a.shape()[1], p = b.shape()[1];
  if (b.shape()[0] != n)
    throw DimensionError("matmul: inner dimensions disagree, " + a.tensor().shape_str() +
                         " vs " + b.tensor().shape_str());
  std::vector<double> out(static_cast<std::size_t>(m) * p);
  kernels::mm_nn(a.tensor().raw(), b.tensor().raw(), out.data(), m, n, p, false);
  return Value::wrap(make_node(
      Tensor({m, p}, std::move(out)), "matmul", {a.node(), b.node()}, [m, n, p](Node& self) {
        const double* g = self.grad.data();
        const Tensor& ta = self.inputs[0]->value;
        const Tensor& tb = self.inputs[1]->value;
        if (self.inputs[0]->tracked)
          kernels::mm_nt(g, tb.raw(), self.inputs[0]->ensure_grad().data(), m, n, p, true);
        if (self.inputs[1]->tracked)
          kernels::mm_tn(ta.raw(), g, self.inputs[1]->ensure_grad().data(), m, n, p, true);
      }));
}

Value matvec(const Value& a, const Value& x) {
  require_rank(a, 2, "matvec");
  require_rank(x, 1, "matvec");
  const int m = a.shape()[0], n = a.shape()[1];
  if (x.shape()[0] != n)
    throw DimensionError("matvec: inner dimensions disagree, " + a.tensor().shape_str() +
                         " vs " + x.tensor().shape_str());
  std::vector<double> out(static_cast<std::size_t>(m));
  kernels::mv(a.tensor().raw(), x.tensor().raw(), out.data(), m, n, false);
  return Value::wrap(make_node(
      Tensor({m}, std::move(out)), "matvec", {a.node(), x.node()}, [m, n](Node& self) {
        const double* g = self.grad.data();
        const Tensor& ta = self.inputs[0]->value;
        const Tensor& tx = self.inputs[1]->value;
        if (self.inputs[0]->tracked)
          kernels::outer(g, tx.raw(), self.inputs[0]->ensure_grad().data(), m, n, true);
        if (self.inputs[1]->tracked)
          kernels::mv_t(ta.raw(), g, self.inputs[1]->ensure_grad().data(), m, n, true);
      }));
}

Value add(const Value& a, const Value& b) {
  require_same_shape(a.tensor(), b.tensor(), "add");
  const int n = a.numel();
  std::vector<double> out(static_cast<std::size_t>(n));
  kernels::add(a.tensor().raw(), b.tensor().raw(), out.data(), n);
  return Value::wrap(make_node(Tensor(a.shape(), std::move(out)), "add", {a.node(), b.node()},
                               [n](Node& self) {
                                 acc(self, 0, self.grad.data(), n);
                                 acc(self, 1, self.grad.data(), n);
                               }));
}

Value sub(const Value& a, const Value& b) {
  require_same_shape(a.tensor(), b.tensor(), "sub");
  const int n = a.numel();
  std::vector<double> out(static_cast<std::size_t>(n));
  kernels::sub(a.tensor().raw(), b.tensor().raw(), out.data(), n);
  return Value::wrap(make_node(Tensor(a.shape(), std::move(out)), "sub", {a.node(), b.node()},
                               [n](Node& self) {
                                 acc(self, 0, self.grad.data(), n);
                                 if (self.inputs[1]->tracked)
                                   kernels::axpy(-1.0, self.grad.data(),
                                                 self.inputs[1]->ensure_grad().data(), n);
                               }));
}

Value mul(const Value& a, const Value& b) {
  require_same_shape(a.tensor(), b.tensor(), "mul");
  const int n = a.numel();
  std::vector<double> out(static_cast<std::size_t>(n));
  kernels::mul(a.tensor().raw(), b.tensor().raw(), out.data(), n);
  return Value::wrap(make_node(Tensor(a.shape(), std::move(out)), "mul", {a.node(), b.node()},
                               [n](Node& self) {
                                 const double* g = self.grad.data();
                                 const double* da = self.inputs[0]->value.raw();
                                 const double* db = self.inputs[1]->value.raw();
                                 if (self.inputs[0]->tracked) {
                                   double* ga = self.inputs[0]->ensure_grad().data();
                                   for (int i = 0; i < n; ++i) ga[i] += g[i] * db[i];
                                 }
                                 if (self.inputs[1]->tracked) {
                                   double* gb = self.inputs[1]->ensure_grad().data();
                                   for (int i = 0; i < n; ++i) gb[i] += g[i] * da[i];
                                 }
                               }));
}

Value scale(const Value& a, double c) {
  const int n = a.numel();
  std::vector<double> out(static_cast<std::size_t>(n));
  kernels::scale(a.tensor().raw(), c, out.data(), n);
  return Value::wrap(make_node(Tensor(a.shape(), std::move(out)), "scale", {a.node()},
                               [n, c](Node& self) {
                                 if (self.inputs[0]->tracked)
                                   kernels::axpy(c, self.grad.data(),
                                                 self.inputs[0]->ensure_grad().data(), n);
                               }));
}

Value add_scalar(const Value& v, const Value& s) {
  require_rank(v, 1, "add_scalar");
  if (s.numel() != 1)
    throw DimensionError("add_scalar: scalar operand must have one element, got " +
                         s.tensor().shape_str());
  const int n = v.numel();
  const double sv = s.tensor().at(0);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[i] = v.tensor().at(i) + sv;
  return Value::wrap(make_node(Tensor(v.shape(), std::move(out)), "add_scalar",
                               {v.node(), s.node()}, [n](Node& self) {
                                 acc(self, 0, self.grad.data(), n);
                                 if (self.inputs[1]->tracked) {
                                   double t = 0.0;
                                   for (int i = 0; i < n; ++i) t += self.grad[i];
                                   self.inputs[1]->ensure_grad()[0] += t;
                                 }
                               }));
}

Value concat(std::span<const Value> parts) {
  if (parts.empty()) throw DomainError("concat: no parts");
  std::vector<NodePtr> ins;
  std::vector<double> out;
  std::vector<int> lens;
  for (const Value& p : parts) {
    require_rank(p, 1, "concat");
    lens.push_back(p.numel());
    auto d = p.tensor().data();
    out.insert(out.end(), d.begin(), d.end());
    ins.push_back(p.node());
  }
  const int total = static_cast<int>(out.size());
  return Value::wrap(make_node(Tensor({total}, std::move(out)), "concat", std::move(ins),
                               [lens](Node& self) {
                                 int off = 0;
                                 for (std::size_t i = 0; i < lens.size(); ++i) {
                                   if (self.inputs[i]->tracked)
                                     kernels::axpy(1.0, self.grad.data() + off,
                                                   self.inputs[i]->ensure_grad().data(), lens[i]);
                                   off += lens[i];
                                 }
                               }));
}

Value concat(const Value& a, const Value& b) {
  const Value parts[] = {a, b};
  return concat(std::span<const Value>(parts, 2));
}

Value slice(const Value& a, int offset, int len) {
  require_rank(a, 1, "slice");
  const int n = a.numel();
  if (offset < 0 || len <= 0 || offset + len > n)
    throw IndexError("slice: range [" + std::to_string(offset) + ", " +
                     std::to_string(offset + len) + ") outside length " + std::to_string(n));
  std::vector<double> out(a.tensor().raw() + offset, a.tensor().raw() + offset + len);
  return Value::wrap(make_node(Tensor({len}, std::move(out)), "slice", {a.node()},
                               [offset, len](Node& self) {
                                 if (self.inputs[0]->tracked)
                                   kernels::axpy(1.0, self.grad.data(),
                                                 self.inputs[0]->ensure_grad().data() + offset, len);
                               }));
}

Value row(const Value& m, int i) {
  require_rank(m, 2, "row");
  const int rows = m.shape()[0], cols = m.shape()[1];
  if (i < 0 || i >= rows)
    throw IndexError("row: index " + std::to_string(i) + " outside " + m.tensor().shape_str());
  const double* src = m.tensor().raw() + static_cast<std::size_t>(i) * cols;
  std::vector<double> out(src, src + cols);
  return Value::wrap(make_node(Tensor({cols}, std::move(out)), "row", {m.node()},
                               [i, cols](Node& self) {
                                 if (self.inputs[0]->tracked)
                                   kernels::axpy(1.0, self.grad.data(),
                                                 self.inputs[0]->ensure_grad().data() +
                                                     static_cast<std::size_t>(i) * cols,
                                                 cols);
                               }));
}

Value row_scale(const Value& m, const Value& w) {
  require_rank(m, 2, "row_scale");
  require_rank(w, 1, "row_scale");
  const int rows = m.shape()[0], cols = m.shape()[1];
  if (w.numel() != rows)
    throw DimensionError("row_scale: weight length " + w.tensor().shape_str() +
                         " does not match rows of " + m.tensor().shape_str());
  std::vector<double> out(static_cast<std::size_t>(rows) * cols);
  for (int i = 0; i < rows; ++i)
    kernels::scale(m.tensor().raw() + static_cast<std::size_t>(i) * cols, w.tensor().at(i),
                   out.data() + static_cast<std::size_t>(i) * cols, cols);
  return Value::wrap(make_node(
      Tensor({rows, cols}, std::move(out)), "row_scale", {m.node(), w.node()},
      [rows, cols](Node& self) {
        const double* g = self.grad.data();
        const double* dm = self.inputs[0]->value.raw();
        const double* dw = self.inputs[1]->value.raw();
        if (self.inputs[0]->tracked) {
          double* gm = self.inputs[0]->ensure_grad().data();
          for (int i = 0; i < rows; ++i)
            kernels::axpy(dw[i], g + static_cast<std::size_t>(i) * cols,
                          gm + static_cast<std::size_t>(i) * cols, cols);
        }
        if (self.inputs[1]->tracked) {
          double* gw = self.inputs[1]->ensure_grad().data();
          for (int i = 0; i < rows; ++i) {
            double s = 0.0;
            for (int j = 0; j < cols; ++j)
              s += g[static_cast<std::size_t>(i) * cols + j] * dm[static_cast<std::size_t>(i) * cols + j];
            gw[i] += s;
          }
        }
      }));
}

Value mean_rows(const Value& m) {
  require_rank(m, 2, "mean_rows");
  const int rows = m.shape()[0], cols = m.shape()[1];
  std::vector<double> out(static_cast<std::size_t>(cols), 0.0);
  for (int i = 0; i < rows; ++i)
    kernels::axpy(1.0 / rows, m.tensor().raw() + static_cast<std::size_t>(i) * cols, out.data(), cols);
  return Value::wrap(make_node(Tensor({cols}, std::move(out)), "mean_rows", {m.node()},
                               [rows, cols](Node& self) {
                                 if (!self.inputs[0]->tracked) return;
                                 double* gm = self.inputs[0]->ensure_grad().data();
                                 for (int i = 0; i < rows; ++i)
                                   kernels::axpy(1.0 / rows, self.grad.data(),
                                                 gm + static_cast<std::size_t>(i) * cols, cols);
                               }));
}

Value sigmoid(const Value& x) {
  const int n = x.numel();
  std::vector<double> out(static_cast<std::size_t>(n));
  kernels::sigmoid(x.tensor().raw(), out.data(), n);
  return Value::wrap(make_node(Tensor(x.shape(), std::move(out)), "sigmoid", {x.node()},
                               [n](Node& self) {
                                 if (self.inputs[0]->tracked)
                                   kernels::sigmoid_bwd(self.value.raw(), self.grad.data(),
                                                        self.inputs[0]->ensure_grad().data(), n);
                               }));
}

Value tanh_(const Value& x) {
  const int n = x.numel();
  std::vector<double> out(static_cast<std::size_t>(n));
  kernels::tanh_(x.tensor().raw(), out.data(), n);
  return Value::wrap(make_node(Tensor(x.shape(), std::move(out)), "tanh", {x.node()},
                               [n](Node& self) {
                                 if (self.inputs[0]->tracked)
                                   kernels::tanh_bwd(self.value.raw(), self.grad.data(),
                                                     self.inputs[0]->ensure_grad().data(), n);
                               }));
}

Value softmax(const Value& x) {
  require_rank(x, 1, "softmax");
  const int n = x.numel();
  const double* d = x.tensor().raw();
  double mx = d[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, d[i]);
  std::vector<double> out(static_cast<std::size_t>(n));
  double z = 0.0;
  for (int i = 0; i < n; ++i) {
    out[i] = std::exp(d[i] - mx);
    z += out[i];
  }
  for (int i = 0; i < n; ++i) out[i] /= z;
  return Value::wrap(make_node(Tensor({n}, std::move(out)), "softmax", {x.node()},
                               [n](Node& self) {
                                 if (!self.inputs[0]->tracked) return;
                                 const double* y = self.value.raw();
                                 const double* g = self.grad.data();
                                 double dot = 0.0;
                                 for (int i = 0; i < n; ++i) dot += g[i] * y[i];
                                 double* gx = self.inputs[0]->ensure_grad().data();
                                 for (int i = 0; i < n; ++i) gx[i] += y[i] * (g[i] - dot);
                               }));
}

Value sum(const Value& x) {
  const int n = x.numel();
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += x.tensor().at(i);
  return Value::wrap(make_node(Tensor::scalar(s), "sum", {x.node()}, [n](Node& self) {
    if (!self.inputs[0]->tracked) return;
    double* gx = self.inputs[0]->ensure_grad().data();
    const double g = self.grad[0];
    for (int i = 0; i < n; ++i) gx[i] += g;
  }));
}

Value add_n(std::span<const Value> xs) {
  if (xs.empty()) throw DomainError("add_n: no terms");
  const int n = xs[0].numel();
  std::vector<NodePtr> ins;
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (const Value& x : xs) {
    require_same_shape(xs[0].tensor(), x.tensor(), "add_n");
    kernels::axpy(1.0, x.tensor().raw(), out.data(), n);
    ins.push_back(x.node());
  }
  return Value::wrap(make_node(Tensor(xs[0].shape(), std::move(out)), "add_n", std::move(ins),
                               [n](Node& self) {
                                 for (std::size_t i = 0; i < self.inputs.size(); ++i)
                                   acc(self, i, self.grad.data(), n);
                               }));
}

Value cross_entropy_logits(const Value& logits, int target) {
  require_rank(logits, 1, "cross_entropy_logits");
  const int n = logits.numel();
  if (target < 0 || target >= n)
    throw IndexError("cross_entropy_logits: target " + std::to_string(target) +
                     " outside vocabulary of size " + std::to_string(n));
  const double* d = logits.tensor().raw();
  double mx = d[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, d[i]);
  double z = 0.0;
  for (int i = 0; i < n; ++i) z += std::exp(d[i] - mx);
  const double lse = mx + std::log(z);
  const double loss = lse - d[target];
  // softmax cached for the backward pass
  std::vector<double> probs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) probs[i] = std::exp(d[i] - lse);
  return Value::wrap(make_node(Tensor::scalar(loss), "cross_entropy", {logits.node()},
                               [n, target, probs = std::move(probs)](Node& self) {
                                 if (!self.inputs[0]->tracked) return;
                                 const double g = self.grad[0];
                                 double* gx = self.inputs[0]->ensure_grad().data();
                                 for (int i = 0; i < n; ++i) gx[i] += g * probs[i];
                                 gx[target] -= g;
                               }));
}

Value binary_cross_entropy(const Value& p, int label) {
  if (p.numel() != 1)
    throw DimensionError("binary_cross_entropy: probability must be scalar, got " +
                         p.tensor().shape_str());
  if (label != 0 && label != 1)
    throw ContractError("binary_cross_entropy: label must be 0 or 1, got " + std::to_string(label));
  constexpr double kEps = 1e-7;
  const double raw = p.tensor().at(0);
  const double q = std::clamp(raw, kEps, 1.0 - kEps);
  const double loss = label == 1 ? -std::log(q) : -std::log(1.0 - q);
  const bool clamped = raw < kEps || raw > 1.0 - kEps;
  return Value::wrap(make_node(Tensor::scalar(loss), "bce", {p.node()},
                               [q, label, clamped](Node& self) {
                                 if (!self.inputs[0]->tracked || clamped) return;
                                 const double g = self.grad[0];
                                 const double d = label == 1 ? -1.0 / q : 1.0 / (1.0 - q);
                                 self.inputs[0]->ensure_grad()[0] += g * d;
                               }));
}

}  // namespace tsg
