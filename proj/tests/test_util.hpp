#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "pvnext/geom.hpp"
#include "pvnext/rng.hpp"
#include "pvnext/tensor.hpp"

namespace pvnext::testutil {

inline double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
}

inline TensorRef random_tensor(std::vector<std::size_t> shape, Rng& rng, bool requires_grad,
                               double lo = -2.0, double hi = 2.0) {
  std::vector<double> v(shape_product(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return requires_grad ? Tensor::param(std::move(shape), std::move(v))
                       : Tensor::constant(std::move(shape), std::move(v));
}

inline PointSet random_points(std::size_t n, Rng& rng, double lo = 0.0, double hi = 1.0) {
  PointSet ps(n);
  for (Vec3& p : ps) p = {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
  return ps;
}

// Backward sweep from an output seeded with an arbitrary upstream gradient.
inline void backward_seeded(const TensorRef& out, const std::vector<double>& seed) {
  out->ensure_grad();
  out->grad = seed;
  std::vector<Tensor*> order;
  std::vector<Tensor*> seen{out.get()};
  auto contains = [&seen](Tensor* t) {
    for (Tensor* s : seen)
      if (s == t) return true;
    return false;
  };
  std::vector<std::pair<Tensor*, std::size_t>> stack{{out.get(), 0}};
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Tensor* child = node->parents[next].get();
      ++next;
      if (child->requires_grad && !contains(child)) {
        seen.push_back(child);
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward_fn) {
      (*it)->ensure_grad();
      (*it)->backward_fn(**it);
    }
  }
}

// Central-difference check of d(sum_i w_i * f(x)_i)/dx against reverse mode.
// Returns the worst relative error over x's components.
inline double grad_check(const std::function<TensorRef(const TensorRef&)>& f, const TensorRef& x,
                         std::uint64_t weight_seed = 7, double h = 1e-5) {
  Rng wrng(weight_seed);
  std::vector<double> weights(f(x)->size());
  for (double& w : weights) w = wrng.uniform(-1.0, 1.0);

  auto weighted = [&](const TensorRef& in) {
    const TensorRef out = f(in);
    double total = 0.0;
    for (std::size_t i = 0; i < out->size(); ++i) total += weights[i] * out->values[i];
    return total;
  };

  x->zero_grad();
  backward_seeded(f(x), weights);
  const std::vector<double> analytic = x->grad;

  double worst = 0.0;
  for (std::size_t i = 0; i < x->size(); ++i) {
    const double keep = x->values[i];
    x->values[i] = keep + h;
    const double up = weighted(x);
    x->values[i] = keep - h;
    const double down = weighted(x);
    x->values[i] = keep;
    const double numeric = (up - down) / (2.0 * h);
    worst = std::max(worst, rel_err(analytic[i], numeric));
  }
  return worst;
}

}  // namespace pvnext::testutil
