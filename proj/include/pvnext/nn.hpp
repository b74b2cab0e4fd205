#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pvnext/rng.hpp"
#include "pvnext/tensor.hpp"

namespace pvnext {

struct LinearLayer {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  TensorRef weight;  // [out_dim x in_dim]
  TensorRef bias;    // [out_dim]
};

// Glorot-uniform init: +-sqrt(6 / (in + out)), zero bias.
LinearLayer make_linear(std::size_t in_dim, std::size_t out_dim, Rng& rng);

// out[b,o] = bias[o] + sum_i weight[o,i] * x[b,i]
TensorRef forward_linear(const TensorRef& x, const LinearLayer& layer);

// Stack of linear layers with ReLU between consecutive layers. The trailing
// activation is optional so the same block serves encoders and logit heads.
struct MlpBlock {
  std::vector<LinearLayer> layers;
  bool relu_after_last = false;

  TensorRef forward(const TensorRef& x) const;
  std::size_t param_count() const;
  std::size_t macs_per_vector() const;  // multiply-adds to push one row through
};

MlpBlock make_mlp(std::size_t in_dim, const std::vector<std::size_t>& widths, bool relu_after_last,
                  Rng& rng);

struct SgdSchedule {
  double base_lr = 0.01;
  std::size_t total_epochs = 1;
  double momentum = 0.0;

  // base_lr * 0.5 * (1 + cos(pi * epoch / total_epochs))
  double lr(std::size_t epoch) const;
};

// Momentum SGD over named parameters: v <- mu*v + g, p <- p - lr*v.
class SgdOptimizer {
 public:
  explicit SgdOptimizer(SgdSchedule schedule) : schedule_(schedule) {}

  // grad_scale divides accumulated gradients (e.g. 1/batch). Throws
  // NumericError naming the parameter on non-finite gradients.
  void step(const std::vector<std::pair<std::string, TensorRef>>& params, std::size_t epoch,
            double grad_scale = 1.0);

  const SgdSchedule& schedule() const { return schedule_; }

 private:
  SgdSchedule schedule_;
  std::vector<std::vector<double>> velocity_;
};

}  // namespace pvnext
