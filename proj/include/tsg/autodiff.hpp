#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "tsg/tensor.hpp"

namespace tsg {

struct Parameter;

// Reverse-mode autodiff over a dynamic tape. A Value is a handle to one tape
// node; ops append nodes, backward() walks the tape once in reverse
// topological order. The tape is rebuilt on every forward pass, which keeps
// variable-length sequence models trivial to express.
//
// Gradients on shared subexpressions accumulate by summation. Constants are
// not tracked and receive no gradient work.
class Value {
 public:
  struct Node {
    Tensor value;
    std::vector<double> grad;  // sized lazily during backward
    bool tracked = false;
    const char* op = "leaf";
    std::vector<std::shared_ptr<Node>> inputs;
    // Reads this node's grad and accumulates into the inputs' grads.
    std::function<void(Node&)> backprop;
    Parameter* param = nullptr;

    std::vector<double>& ensure_grad() {
      if (grad.size() != static_cast<std::size_t>(value.numel()))
        grad.assign(static_cast<std::size_t>(value.numel()), 0.0);
      return grad;
    }
  };

  Value() = default;

  static Value constant(Tensor t);
  // Grad-tracked input without a Parameter; used for gradients wrt raw data.
  static Value variable(Tensor t);
  // Leaf bound to a Parameter; backward() adds the node gradient to p.grad.
  // With track=false the parameter enters the graph as a constant (used for
  // no-grad inference passes).
  static Value param(Parameter& p, bool track = true);

  const Tensor& tensor() const { return node_->value; }
  const std::vector<int>& shape() const { return node_->value.shape(); }
  int numel() const { return node_->value.numel(); }
  double item() const { return node_->value.item(); }
  bool tracked() const { return node_ && node_->tracked; }

  // Gradient accumulated by the last backward() over this node.
  std::span<const double> grad() const;

  explicit operator bool() const { return node_ != nullptr; }
  const std::shared_ptr<Node>& node() const { return node_; }

  static Value wrap(std::shared_ptr<Node> n) { return Value(std::move(n)); }

 private:
  explicit Value(std::shared_ptr<Node> n) : node_(std::move(n)) {}
  std::shared_ptr<Node> node_;
};

// root must be a tracked single-element value (a loss).
void backward(const Value& root);

Value matmul(const Value& a, const Value& b);   // [m x n] * [n x p]
Value matvec(const Value& a, const Value& x);   // [m x n] * [n]
Value add(const Value& a, const Value& b);      // same shape
Value sub(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b);      // elementwise
Value scale(const Value& a, double c);
Value add_scalar(const Value& v, const Value& s);  // v[i] + s[0]
Value concat(std::span<const Value> parts);        // rank-1 parts
Value concat(const Value& a, const Value& b);
Value slice(const Value& a, int offset, int len);  // rank-1
Value row(const Value& m, int i);                  // rank-2 -> rank-1
Value row_scale(const Value& m, const Value& w);   // out[i,:] = w[i] * m[i,:]
Value mean_rows(const Value& m);                   // column means
Value sigmoid(const Value& x);
Value tanh_(const Value& x);
Value softmax(const Value& x);                     // rank-1
Value sum(const Value& x);                         // -> [1]
Value add_n(std::span<const Value> xs);            // same-shape sum
Value cross_entropy_logits(const Value& logits, int target);
Value binary_cross_entropy(const Value& p, int label);  // p: [1], clamped to [1e-7, 1-1e-7]

}  // namespace tsg
