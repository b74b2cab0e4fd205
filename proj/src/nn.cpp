#include "pvnext/nn.hpp"

#include <cmath>

#include "pvnext/counters.hpp"
#include "pvnext/errors.hpp"

namespace pvnext {

LinearLayer make_linear(std::size_t in_dim, std::size_t out_dim, Rng& rng) {
  if (in_dim == 0 || out_dim == 0) {
    throw ConfigError("linear layer dims must be positive, got " + std::to_string(in_dim) + "->" +
                      std::to_string(out_dim));
  }
  const double bound = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
  std::vector<double> w(in_dim * out_dim);
  for (double& v : w) v = rng.uniform(-bound, bound);
  LinearLayer layer;
  layer.in_dim = in_dim;
  layer.out_dim = out_dim;
  layer.weight = Tensor::param({out_dim, in_dim}, std::move(w));
  layer.bias = Tensor::param({out_dim}, std::vector<double>(out_dim, 0.0));
  return layer;
}

TensorRef forward_linear(const TensorRef& x, const LinearLayer& layer) {
  if (x->rank() != 2 || x->shape[1] != layer.in_dim) {
    throw DimensionError("linear: input " + shape_string(x->shape) + " does not match weight " +
                         shape_string(layer.weight->shape));
  }
  const std::size_t batch = x->shape[0];
  const std::size_t in = layer.in_dim;
  const std::size_t out = layer.out_dim;
  const TensorRef w = layer.weight;
  const TensorRef b = layer.bias;

  std::vector<double> y(batch * out);
  for (std::size_t r = 0; r < batch; ++r) {
    const double* xv = x->values.data() + r * in;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wv = w->values.data() + o * in;
      double acc = b->values[o];
      for (std::size_t i = 0; i < in; ++i) acc += wv[i] * xv[i];
      y[r * out + o] = acc;
    }
  }
  counters().multiply_adds.fetch_add(std::uint64_t(batch) * in * out, std::memory_order_relaxed);

  auto t = std::make_shared<Tensor>();
  t->shape = {batch, out};
  t->values = std::move(y);
  t->parents = {x, w, b};
  t->requires_grad = x->requires_grad || w->requires_grad || b->requires_grad;
  if (t->requires_grad) {
    t->backward_fn = [x, w, b, batch, in, out](Tensor& self) {
      if (x->requires_grad) {
        x->ensure_grad();
        for (std::size_t r = 0; r < batch; ++r) {
          for (std::size_t o = 0; o < out; ++o) {
            const double g = self.grad[r * out + o];
            const double* wv = w->values.data() + o * in;
            double* xg = x->grad.data() + r * in;
            for (std::size_t i = 0; i < in; ++i) xg[i] += g * wv[i];
          }
        }
      }
      if (w->requires_grad) {
        w->ensure_grad();
        for (std::size_t r = 0; r < batch; ++r) {
          const double* xv = x->values.data() + r * in;
          for (std::size_t o = 0; o < out; ++o) {
            const double g = self.grad[r * out + o];
            double* wg = w->grad.data() + o * in;
            for (std::size_t i = 0; i < in; ++i) wg[i] += g * xv[i];
          }
        }
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (std::size_t r = 0; r < batch; ++r) {
          for (std::size_t o = 0; o < out; ++o) b->grad[o] += self.grad[r * out + o];
        }
      }
    };
  }
  return t;
}

TensorRef MlpBlock::forward(const TensorRef& x) const {
  TensorRef h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = forward_linear(h, layers[i]);
    if (i + 1 < layers.size() || relu_after_last) h = relu(h);
  }
  return h;
}

std::size_t MlpBlock::param_count() const {
  std::size_t n = 0;
  for (const LinearLayer& l : layers) n += l.in_dim * l.out_dim + l.out_dim;
  return n;
}

std::size_t MlpBlock::macs_per_vector() const {
  std::size_t n = 0;
  for (const LinearLayer& l : layers) n += l.in_dim * l.out_dim;
  return n;
}

MlpBlock make_mlp(std::size_t in_dim, const std::vector<std::size_t>& widths, bool relu_after_last,
                  Rng& rng) {
  if (widths.empty()) throw ConfigError("mlp: empty width list");
  MlpBlock mlp;
  mlp.relu_after_last = relu_after_last;
  std::size_t prev = in_dim;
  for (std::size_t w : widths) {
    mlp.layers.push_back(make_linear(prev, w, rng));
    prev = w;
  }
  return mlp;
}

double SgdSchedule::lr(std::size_t epoch) const {
  return base_lr * 0.5 *
         (1.0 + std::cos(M_PI * static_cast<double>(epoch) / static_cast<double>(total_epochs)));
}

void SgdOptimizer::step(const std::vector<std::pair<std::string, TensorRef>>& params,
                        std::size_t epoch, double grad_scale) {
  if (velocity_.empty()) {
    velocity_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      velocity_[i].assign(params[i].second->size(), 0.0);
    }
  }
  if (velocity_.size() != params.size()) {
    throw ConfigError("sgd: parameter set changed size mid-run");
  }
  const double lr = schedule_.lr(epoch);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, p] = params[i];
    p->ensure_grad();
    if (p->grad.size() != p->values.size()) {
      throw DimensionError("sgd: grad/value size mismatch for " + name);
    }
    std::vector<double>& v = velocity_[i];
    for (std::size_t j = 0; j < p->values.size(); ++j) {
      const double g = p->grad[j] * grad_scale;
      if (!std::isfinite(g)) {
        throw NumericError("sgd: non-finite gradient in parameter '" + name + "' at index " +
                           std::to_string(j));
      }
      v[j] = schedule_.momentum * v[j] + g;
      p->values[j] -= lr * v[j];
    }
  }
}

}  // namespace pvnext
