#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

namespace pvnext {

class Tensor;
using TensorRef = std::shared_ptr<Tensor>;

// Dense row-major 64-bit tensor, doubling as a node in a reverse-mode graph.
// Ops below record parents and a backward closure; backward() walks the graph
// in reverse topological order and accumulates gradients into every tensor
// with requires_grad set.
class Tensor {
 public:
  std::vector<std::size_t> shape;
  std::vector<double> values;
  std::vector<double> grad;  // same length as values once ensure_grad() ran
  bool requires_grad = false;

  std::vector<TensorRef> parents;
  std::function<void(Tensor&)> backward_fn;  // reads grad, scatters to parents

  static TensorRef constant(std::vector<std::size_t> shape, std::vector<double> values);
  static TensorRef param(std::vector<std::size_t> shape, std::vector<double> values);
  static TensorRef zeros(std::vector<std::size_t> shape, bool requires_grad = false);

  std::size_t size() const { return values.size(); }
  std::size_t rank() const { return shape.size(); }

  void ensure_grad();
  void zero_grad();
};

std::size_t shape_product(const std::vector<std::size_t>& shape);
std::string shape_string(const std::vector<std::size_t>& shape);

// Elementwise; shapes must match exactly.
TensorRef add(const TensorRef& a, const TensorRef& b);
TensorRef sub(const TensorRef& a, const TensorRef& b);

TensorRef relu(const TensorRef& x);

// Mean of all elements, as a scalar (shape {1}).
TensorRef mean_all(const TensorRef& x);

struct MaxPoolResult {
  TensorRef values;                 // input shape with `axis` removed
  std::vector<std::size_t> argmax;  // per output element: winning index along axis
};

// Max over one axis. Ties resolve to the lowest index; gradient routes only
// to the winning slot of each pooled slice.
MaxPoolResult maxpool_over_axis(const TensorRef& x, std::size_t axis);

// Row-major view with a new shape of equal element count.
TensorRef reshape(const TensorRef& x, std::vector<std::size_t> new_shape);

// x is [R x C]; picks rows, duplicates allowed. Gradient scatter-adds.
TensorRef gather_rows(const TensorRef& x, const std::vector<std::size_t>& rows);

// [R x Ca] ++ [R x Cb] -> [R x (Ca+Cb)]
TensorRef concat_cols(const TensorRef& a, const TensorRef& b);

// Vertical stack of [Ri x C] blocks -> [sum(Ri) x C]
TensorRef concat_rows(const std::vector<TensorRef>& blocks);

// Mean over rows of -log softmax(logits)[label]; max-subtracted for stability.
TensorRef softmax_cross_entropy(const TensorRef& logits, const std::vector<std::size_t>& labels);

// Reverse-mode sweep from a scalar loss; seeds d(loss)/d(loss) = 1.
void backward(const TensorRef& loss);

}  // namespace pvnext
