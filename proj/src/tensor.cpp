#include "pvnext/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "pvnext/errors.hpp"

namespace pvnext {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += " x ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

namespace {

TensorRef make_node(std::vector<std::size_t> shape, std::vector<double> values,
                    std::vector<TensorRef> parents) {
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->values = std::move(values);
  t->parents = std::move(parents);
  for (const TensorRef& p : t->parents) {
    if (p->requires_grad) {
      t->requires_grad = true;
      break;
    }
  }
  return t;
}

void check_same_shape(const TensorRef& a, const TensorRef& b, const char* op) {
  if (a->shape != b->shape) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a->shape) +
                         " vs " + shape_string(b->shape));
  }
}

}  // namespace

TensorRef Tensor::constant(std::vector<std::size_t> shape, std::vector<double> values) {
  if (shape_product(shape) != values.size()) {
    throw DimensionError("tensor: " + shape_string(shape) + " cannot hold " +
                         std::to_string(values.size()) + " values");
  }
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->values = std::move(values);
  return t;
}

TensorRef Tensor::param(std::vector<std::size_t> shape, std::vector<double> values) {
  TensorRef t = constant(std::move(shape), std::move(values));
  t->requires_grad = true;
  return t;
}

TensorRef Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  std::vector<double> v(shape_product(shape), 0.0);
  return requires_grad ? param(std::move(shape), std::move(v))
                       : constant(std::move(shape), std::move(v));
}

void Tensor::ensure_grad() {
  if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
}

void Tensor::zero_grad() { grad.assign(values.size(), 0.0); }

TensorRef add(const TensorRef& a, const TensorRef& b) {
  check_same_shape(a, b, "add");
  std::vector<double> out(a->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->values[i] + b->values[i];
  TensorRef t = make_node(a->shape, std::move(out), {a, b});
  if (t->requires_grad) {
    t->backward_fn = [a, b](Tensor& self) {
      if (a->requires_grad) {
        a->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) b->grad[i] += self.grad[i];
      }
    };
  }
  return t;
}

TensorRef sub(const TensorRef& a, const TensorRef& b) {
  check_same_shape(a, b, "sub");
  std::vector<double> out(a->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->values[i] - b->values[i];
  TensorRef t = make_node(a->shape, std::move(out), {a, b});
  if (t->requires_grad) {
    t->backward_fn = [a, b](Tensor& self) {
      if (a->requires_grad) {
        a->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) b->grad[i] -= self.grad[i];
      }
    };
  }
  return t;
}

TensorRef relu(const TensorRef& x) {
  std::vector<double> out(x->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x->values[i] > 0.0 ? x->values[i] : 0.0;
  TensorRef t = make_node(x->shape, std::move(out), {x});
  if (t->requires_grad) {
    t->backward_fn = [x](Tensor& self) {
      x->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        if (x->values[i] > 0.0) x->grad[i] += self.grad[i];
      }
    };
  }
  return t;
}

TensorRef mean_all(const TensorRef& x) {
  if (x->size() == 0) throw DimensionError("mean_all: empty tensor");
  double sum = 0.0;
  for (double v : x->values) sum += v;
  const double inv_n = 1.0 / static_cast<double>(x->size());
  TensorRef t = make_node({1}, {sum * inv_n}, {x});
  if (t->requires_grad) {
    t->backward_fn = [x, inv_n](Tensor& self) {
      x->ensure_grad();
      const double g = self.grad[0] * inv_n;
      for (double& gi : x->grad) gi += g;
    };
  }
  return t;
}

MaxPoolResult maxpool_over_axis(const TensorRef& x, std::size_t axis) {
  if (axis >= x->rank()) {
    throw DimensionError("maxpool: axis " + std::to_string(axis) + " out of range for " +
                         shape_string(x->shape));
  }
  const std::size_t len = x->shape[axis];
  if (len == 0) throw DimensionError("maxpool: empty axis");

  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x->shape[i];
  for (std::size_t i = axis + 1; i < x->rank(); ++i) inner *= x->shape[i];

  std::vector<std::size_t> out_shape;
  for (std::size_t i = 0; i < x->rank(); ++i) {
    if (i != axis) out_shape.push_back(x->shape[i]);
  }
  if (out_shape.empty()) out_shape.push_back(1);  // pooling a vector yields a scalar

  std::vector<double> out(outer * inner);
  std::vector<std::size_t> argmax(outer * inner);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      std::size_t best_k = 0;
      double best = x->values[(o * len) * inner + in];
      for (std::size_t k = 1; k < len; ++k) {
        const double v = x->values[(o * len + k) * inner + in];
        if (v > best) {  // strict: ties keep the lowest index
          best = v;
          best_k = k;
        }
      }
      out[o * inner + in] = best;
      argmax[o * inner + in] = best_k;
    }
  }

  MaxPoolResult res;
  res.argmax = argmax;
  res.values = make_node(std::move(out_shape), std::move(out), {x});
  if (res.values->requires_grad) {
    res.values->backward_fn = [x, argmax = std::move(argmax), len, inner](Tensor& self) {
      x->ensure_grad();
      const std::size_t n = self.grad.size();
      for (std::size_t idx = 0; idx < n; ++idx) {
        const std::size_t o = idx / inner;
        const std::size_t in = idx % inner;
        x->grad[(o * len + argmax[idx]) * inner + in] += self.grad[idx];
      }
    };
  }
  return res;
}

TensorRef reshape(const TensorRef& x, std::vector<std::size_t> new_shape) {
  if (shape_product(new_shape) != x->size()) {
    throw DimensionError("reshape: " + shape_string(x->shape) + " -> " +
                         shape_string(new_shape) + " changes element count");
  }
  TensorRef t = make_node(std::move(new_shape), x->values, {x});
  if (t->requires_grad) {
    t->backward_fn = [x](Tensor& self) {
      x->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) x->grad[i] += self.grad[i];
    };
  }
  return t;
}

TensorRef gather_rows(const TensorRef& x, const std::vector<std::size_t>& rows) {
  if (x->rank() != 2) throw DimensionError("gather_rows: need rank-2, got " + shape_string(x->shape));
  const std::size_t n_rows = x->shape[0];
  const std::size_t cols = x->shape[1];
  std::vector<double> out(rows.size() * cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= n_rows) {
      throw DimensionError("gather_rows: index " + std::to_string(rows[r]) + " out of range " +
                           std::to_string(n_rows));
    }
    std::copy_n(x->values.begin() + rows[r] * cols, cols, out.begin() + r * cols);
  }
  TensorRef t = make_node({rows.size(), cols}, std::move(out), {x});
  if (t->requires_grad) {
    t->backward_fn = [x, rows, cols](Tensor& self) {
      x->ensure_grad();
      for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          x->grad[rows[r] * cols + c] += self.grad[r * cols + c];
        }
      }
    };
  }
  return t;
}

TensorRef concat_cols(const TensorRef& a, const TensorRef& b) {
  if (a->rank() != 2 || b->rank() != 2 || a->shape[0] != b->shape[0]) {
    throw DimensionError("concat_cols: incompatible " + shape_string(a->shape) + " and " +
                         shape_string(b->shape));
  }
  const std::size_t rows = a->shape[0];
  const std::size_t ca = a->shape[1], cb = b->shape[1];
  std::vector<double> out(rows * (ca + cb));
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a->values.begin() + r * ca, ca, out.begin() + r * (ca + cb));
    std::copy_n(b->values.begin() + r * cb, cb, out.begin() + r * (ca + cb) + ca);
  }
  TensorRef t = make_node({rows, ca + cb}, std::move(out), {a, b});
  if (t->requires_grad) {
    t->backward_fn = [a, b, rows, ca, cb](Tensor& self) {
      if (a->requires_grad) a->ensure_grad();
      if (b->requires_grad) b->ensure_grad();
      for (std::size_t r = 0; r < rows; ++r) {
        if (a->requires_grad) {
          for (std::size_t c = 0; c < ca; ++c) a->grad[r * ca + c] += self.grad[r * (ca + cb) + c];
        }
        if (b->requires_grad) {
          for (std::size_t c = 0; c < cb; ++c) {
            b->grad[r * cb + c] += self.grad[r * (ca + cb) + ca + c];
          }
        }
      }
    };
  }
  return t;
}

TensorRef concat_rows(const std::vector<TensorRef>& blocks) {
  if (blocks.empty()) throw DimensionError("concat_rows: no blocks");
  const std::size_t cols = blocks.front()->shape.back();
  std::size_t rows = 0;
  for (const TensorRef& b : blocks) {
    if (b->rank() != 2 || b->shape[1] != cols) {
      throw DimensionError("concat_rows: block " + shape_string(b->shape) +
                           " does not match width " + std::to_string(cols));
    }
    rows += b->shape[0];
  }
  std::vector<double> out;
  out.reserve(rows * cols);
  for (const TensorRef& b : blocks) {
    out.insert(out.end(), b->values.begin(), b->values.end());
  }
  TensorRef t = make_node({rows, cols}, std::move(out),
                          std::vector<TensorRef>(blocks.begin(), blocks.end()));
  if (t->requires_grad) {
    t->backward_fn = [blocks](Tensor& self) {
      std::size_t offset = 0;
      for (const TensorRef& b : blocks) {
        if (b->requires_grad) {
          b->ensure_grad();
          for (std::size_t i = 0; i < b->size(); ++i) b->grad[i] += self.grad[offset + i];
        }
        offset += b->size();
      }
    };
  }
  return t;
}

TensorRef softmax_cross_entropy(const TensorRef& logits, const std::vector<std::size_t>& labels) {
  if (logits->rank() != 2) {
    throw DimensionError("cross_entropy: logits must be rank-2, got " + shape_string(logits->shape));
  }
  const std::size_t batch = logits->shape[0];
  const std::size_t classes = logits->shape[1];
  if (labels.size() != batch) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for batch " +
                         std::to_string(batch));
  }
  for (std::size_t b = 0; b < batch; ++b) {
    if (labels[b] >= classes) {
      throw ConfigError("cross_entropy: label " + std::to_string(labels[b]) +
                        " out of range for " + std::to_string(classes) + " classes");
    }
  }

  // softmax cached for the backward pass
  std::vector<double> softmax(batch * classes);
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const double* row = logits->values.data() + b * classes;
    double mx = row[0];
    for (std::size_t c = 1; c < classes; ++c) mx = std::max(mx, row[c]);
    double denom = 0.0;
    for (std::size_t c = 0; c < classes; ++c) denom += std::exp(row[c] - mx);
    const double log_denom = std::log(denom);
    for (std::size_t c = 0; c < classes; ++c) {
      softmax[b * classes + c] = std::exp(row[c] - mx) / denom;
    }
    loss += log_denom - (row[labels[b]] - mx);
  }
  loss /= static_cast<double>(batch);

  TensorRef t = make_node({1}, {loss}, {logits});
  if (t->requires_grad) {
    t->backward_fn = [logits, labels, softmax = std::move(softmax), batch, classes](Tensor& self) {
      logits->ensure_grad();
      const double g = self.grad[0] / static_cast<double>(batch);
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t c = 0; c < classes; ++c) {
          const double delta = (c == labels[b]) ? 1.0 : 0.0;
          logits->grad[b * classes + c] += g * (softmax[b * classes + c] - delta);
        }
      }
    };
  }
  return t;
}

void backward(const TensorRef& loss) {
  if (loss->size() != 1) {
    throw DimensionError("backward: loss must be scalar, got " + shape_string(loss->shape));
  }
  // Iterative post-order DFS; recursion would overflow on deep graphs.
  std::vector<Tensor*> order;
  std::unordered_set<Tensor*> visited;
  std::vector<std::pair<Tensor*, std::size_t>> stack;
  stack.emplace_back(loss.get(), 0);
  visited.insert(loss.get());
  while (!stack.empty()) {
    auto& [node, next_child] = stack.back();
    if (next_child < node->parents.size()) {
      Tensor* child = node->parents[next_child].get();
      ++next_child;
      if (child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss->ensure_grad();
  loss->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Tensor* node = *it;
    if (node->backward_fn) {
      node->ensure_grad();
      node->backward_fn(*node);
    }
  }
}

}  // namespace pvnext
