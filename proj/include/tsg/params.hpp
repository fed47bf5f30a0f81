#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "tsg/rng.hpp"
#include "tsg/tensor.hpp"

namespace tsg {

// Trainable tensor. The value is an immutable Tensor replaced wholesale by
// the optimizer; the gradient buffer matches its length at all times. Frozen
// parameters keep receiving no updates regardless of gradient content.
struct Parameter {
  std::string name;
  Tensor value;
  std::vector<double> grad;
  bool frozen = false;

  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
  void assign(Tensor t);
};

// Ordered, name-indexed collection of parameters. Creation order is the
// checkpoint order, so identical construction sequences produce identical
// checkpoint bytes.
class ParamSet {
 public:
  // Initializes uniformly in [-s, s] with s = 1/sqrt(fan_in) where fan_in is
  // the last dimension, drawing row-major from rng.
  Parameter& create(const std::string& name, std::vector<int> shape, Rng& rng);
  Parameter& create_zeros(const std::string& name, std::vector<int> shape);

  Parameter* find(const std::string& name) const;
  Parameter& at(const std::string& name) const;
  std::size_t size() const { return order_.size(); }
  const std::vector<Parameter*>& all() const { return order_; }

  void zero_grads() const;
  void set_frozen(const std::string& prefix, bool frozen) const;

  // Checkpoint container: magic "TSGW", little-endian throughout. Round-trips
  // bit-exactly.
  void save(const std::string& path) const;
  void save_prefix(const std::string& path, const std::string& prefix) const;
  // Loads every entry of the file into matching parameters (name and shape
  // must agree); parameters absent from the file keep their current values.
  void load(const std::string& path) const;

 private:
  Parameter& insert(const std::string& name, std::vector<int> shape, std::vector<double> data);

  std::vector<std::unique_ptr<Parameter>> storage_;
  std::vector<Parameter*> order_;
  std::unordered_map<std::string, Parameter*> index_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 5.0;  // global-norm clip applied before each step; <= 0 disables
};

// Standard bias-corrected Adam over a ParamSet. Frozen parameters are
// skipped entirely (no moment update, no value change). All gradients,
// frozen or not, are zeroed after each step.
class Adam {
 public:
  Adam(const ParamSet& params, AdamConfig cfg);

  void step();
  long long steps_taken() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<Parameter*> params_;
  std::vector<std::vector<double>> m_, v_;
  long long t_ = 0;
};

}  // namespace tsg
