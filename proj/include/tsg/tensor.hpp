#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tsg/error.hpp"

namespace tsg {

// Dense row-major tensor of doubles. Values are immutable after construction;
// copies share the underlying buffer, so passing tensors around is cheap and
// read-only sharing across threads is safe. Every op that "modifies" a tensor
// builds a new one.
class Tensor {
 public:
  Tensor() : shape_{0}, data_(std::make_shared<const std::vector<double>>()) {}

  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double value);
  static Tensor scalar(double value) { return Tensor({1}, {value}); }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  int numel() const { return numel_; }

  std::span<const double> data() const { return {data_->data(), data_->size()}; }
  const double* raw() const { return data_->data(); }
  double at(int i) const { return (*data_)[static_cast<std::size_t>(i)]; }
  double at(int r, int c) const {
    return (*data_)[static_cast<std::size_t>(r) * static_cast<std::size_t>(shape_[1]) + static_cast<std::size_t>(c)];
  }

  // Only defined for single-element tensors.
  double item() const;

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool all_finite() const;

  static std::string shape_str(const std::vector<int>& shape);
  std::string shape_str() const { return shape_str(shape_); }

 private:
  std::vector<int> shape_;
  int numel_ = 0;
  std::shared_ptr<const std::vector<double>> data_;
};

// Checks used by ops to reject malformed shapes with a message naming both.
void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

}  // namespace tsg
