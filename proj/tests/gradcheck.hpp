#pragma once

// Central finite-difference oracles for the gradient tests. The error metric
// is |analytic - numeric| / max(1e-3, |analytic|, |numeric|): pure relative
// error away from zero, with a floor so that near-zero gradients compare
// absolutely (plain relative error amplifies finite-difference noise there).

#include <cmath>
#include <functional>
#include <vector>

#include "tsg/autodiff.hpp"
#include "tsg/params.hpp"

namespace gradcheck {

inline double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({1e-3, std::abs(analytic), std::abs(numeric)});
}

inline void set_coord(tsg::Parameter& p, int k, double v) {
  std::vector<double> data(p.value.raw(), p.value.raw() + p.value.numel());
  data[static_cast<std::size_t>(k)] = v;
  p.value = tsg::Tensor(p.value.shape(), std::move(data));
}

inline tsg::Tensor with_coord(const tsg::Tensor& t, int k, double v) {
  std::vector<double> data(t.raw(), t.raw() + t.numel());
  data[static_cast<std::size_t>(k)] = v;
  return tsg::Tensor(t.shape(), std::move(data));
}

// Worst-case error over every coordinate of every non-frozen parameter in ps.
// `build` must construct the loss graph from the current parameter values.
inline double max_param_grad_err(const std::function<tsg::Value()>& build, const tsg::ParamSet& ps,
                                 double h = 1e-5) {
  ps.zero_grads();
  tsg::backward(build());
  std::vector<std::vector<double>> analytic;
  for (const tsg::Parameter* p : ps.all()) analytic.push_back(p->grad);
  ps.zero_grads();

  double worst = 0.0;
  for (std::size_t pi = 0; pi < ps.all().size(); ++pi) {
    tsg::Parameter* p = ps.all()[pi];
    if (p->frozen) continue;
    for (int k = 0; k < p->value.numel(); ++k) {
      const double orig = p->value.at(k);
      set_coord(*p, k, orig + h);
      const double fp = build().item();
      set_coord(*p, k, orig - h);
      const double fm = build().item();
      set_coord(*p, k, orig);
      worst = std::max(worst, rel_err(analytic[pi][static_cast<std::size_t>(k)], (fp - fm) / (2.0 * h)));
    }
  }
  return worst;
}

// Same, for a gradient with respect to a raw input tensor.
inline double max_input_grad_err(const std::function<tsg::Value(const tsg::Value&)>& build,
                                 const tsg::Tensor& x0, double h = 1e-5) {
  tsg::Value leaf = tsg::Value::variable(x0);
  tsg::backward(build(leaf));
  const std::vector<double> analytic(leaf.grad().begin(), leaf.grad().end());

  double worst = 0.0;
  for (int k = 0; k < x0.numel(); ++k) {
    const double orig = x0.at(k);
    const double fp = build(tsg::Value::constant(with_coord(x0, k, orig + h))).item();
    const double fm = build(tsg::Value::constant(with_coord(x0, k, orig - h))).item();
    worst = std::max(worst, rel_err(analytic[static_cast<std::size_t>(k)], (fp - fm) / (2.0 * h)));
  }
  return worst;
}

inline tsg::Tensor random_tensor(std::vector<int> shape, tsg::Rng& rng, double lo = -1.0,
                                 double hi = 1.0) {
  long long n = 1;
  for (int d : shape) n *= d;
  std::vector<double> data(static_cast<std::size_t>(n));
  for (double& v : data) v = rng.uniform(lo, hi);
  return tsg::Tensor(std::move(shape), std::move(data));
}

}  // namespace gradcheck
