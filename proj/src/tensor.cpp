#include "tsg/tensor.hpp"

#include <cmath>
#include <sstream>

namespace tsg {

namespace {
int checked_numel(const std::vector<int>& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one dimension");
  long long n = 1;
  for (int d : shape) {
    if (d <= 0) throw DimensionError("tensor dimensions must be positive, got " + Tensor::shape_str(shape));
    n *= d;
    if (n > (1LL << 31)) throw DimensionError("tensor too large: " + Tensor::shape_str(shape));
  }
  return static_cast<int>(n);
}
}  // namespace

Tensor::Tensor(std::vector<int> shape, std::vector<double> data) : shape_(std::move(shape)) {
  numel_ = checked_numel(shape_);
  if (static_cast<std::size_t>(numel_) != data.size()) {
    throw DimensionError("tensor data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape_));
  }
  data_ = std::make_shared<const std::vector<double>>(std::move(data));
}

Tensor Tensor::zeros(std::vector<int> shape) {
  int n = checked_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), 0.0));
}

Tensor Tensor::full(std::vector<int> shape, double value) {
  int n = checked_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), value));
}

double Tensor::item() const {
  if (numel_ != 1) throw DimensionError("item() requires a single-element tensor, got " + shape_str());
  return (*data_)[0];
}

bool Tensor::all_finite() const {
  for (double v : *data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  }
}

}  // namespace tsg
