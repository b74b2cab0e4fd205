#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pvnext/errors.hpp"
#include "pvnext/tensor.hpp"
#include "test_util.hpp"

#include "softmax_cases.inc"

using namespace pvnext;
using namespace pvnext::testutil;

TEST_CASE("tensor construction validates shape") {
  CHECK_THROWS_AS(Tensor::constant({2, 3}, {1.0}), DimensionError);
  auto t = Tensor::constant({2, 2}, {1, 2, 3, 4});
  CHECK(t->size() == 4);
  CHECK_FALSE(t->requires_grad);
}

TEST_CASE("add/sub elementwise with shape check") {
  auto a = Tensor::constant({2}, {1.0, 2.0});
  auto b = Tensor::constant({2}, {10.0, 20.0});
  CHECK(add(a, b)->values == std::vector<double>{11.0, 22.0});
  CHECK(sub(b, a)->values == std::vector<double>{9.0, 18.0});
  auto c = Tensor::constant({3}, {1, 2, 3});
  CHECK_THROWS_AS(add(a, c), DimensionError);
}

TEST_CASE("maxpool examples") {
  // [[1,5],[3,2]] over axis 0 -> [3,5], argmax [1,0]
  auto x = Tensor::constant({2, 2}, {1, 5, 3, 2});
  auto res = maxpool_over_axis(x, 0);
  CHECK(res.values->values == std::vector<double>{3, 5});
  CHECK(res.argmax == std::vector<std::size_t>{1, 0});

  // single-element axis is the identity
  auto y = Tensor::constant({1, 3}, {4, -1, 7});
  auto res1 = maxpool_over_axis(y, 0);
  CHECK(res1.values->values == std::vector<double>{4, -1, 7});

  CHECK_THROWS_AS(maxpool_over_axis(x, 2), DimensionError);
}

TEST_CASE("maxpool ties break to the lowest index") {
  auto x = Tensor::constant({3}, {2.0, 2.0, 1.0});
  auto res = maxpool_over_axis(x, 0);
  CHECK(res.argmax == std::vector<std::size_t>{0});
}

TEST_CASE("maxpool matches exhaustive scan oracle on random rank-3 tensors") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d0 = 1 + rng.bounded(4);
    const std::size_t d1 = 1 + rng.bounded(5);
    const std::size_t d2 = 1 + rng.bounded(3);
    auto x = random_tensor({d0, d1, d2}, rng, false);
    for (std::size_t axis = 0; axis < 3; ++axis) {
      auto res = maxpool_over_axis(x, axis);
      // oracle: exhaustive scan over all source elements
      std::vector<std::size_t> dims = {d0, d1, d2};
      std::vector<double> expect(res.values->size(),
                                 -std::numeric_limits<double>::infinity());
      for (std::size_t i = 0; i < d0; ++i) {
        for (std::size_t j = 0; j < d1; ++j) {
          for (std::size_t k = 0; k < d2; ++k) {
            std::vector<std::size_t> idx = {i, j, k};
            std::size_t out_flat = 0;
            for (std::size_t a = 0; a < 3; ++a) {
              if (a == axis) continue;
              out_flat = out_flat * dims[a] + idx[a];
            }
            const double v = x->values[(i * d1 + j) * d2 + k];
            expect[out_flat] = std::max(expect[out_flat], v);
          }
        }
      }
      CHECK(res.values->values == expect);
    }
  }
}

TEST_CASE("maxpool gradient is a 0/1 routing mask summing to 1 per slice") {
  Rng rng(5);
  auto x = random_tensor({3, 4}, rng, true);
  auto res = maxpool_over_axis(x, 1);
  backward_seeded(res.values, std::vector<double>(res.values->size(), 1.0));
  for (std::size_t row = 0; row < 3; ++row) {
    double sum = 0.0;
    for (std::size_t col = 0; col < 4; ++col) {
      const double g = x->grad[row * 4 + col];
      CHECK((g == 0.0 || g == 1.0));
      sum += g;
    }
    CHECK(sum == 1.0);
  }
}

TEST_CASE("reshape, gather_rows, concat round values through unchanged") {
  auto x = Tensor::constant({2, 3}, {1, 2, 3, 4, 5, 6});
  auto r = reshape(x, {3, 2});
  CHECK(r->values == x->values);
  CHECK_THROWS_AS(reshape(x, {4, 2}), DimensionError);

  auto g = gather_rows(x, {1, 0, 1});
  CHECK(g->values == std::vector<double>{4, 5, 6, 1, 2, 3, 4, 5, 6});
  CHECK_THROWS_AS(gather_rows(x, {2}), DimensionError);

  auto y = Tensor::constant({2, 1}, {9, 8});
  auto cc = concat_cols(x, y);
  CHECK(cc->values == std::vector<double>{1, 2, 3, 9, 4, 5, 6, 8});
  auto cr = concat_rows({x, x});
  CHECK(cr->shape == std::vector<std::size_t>{4, 3});
}

TEST_CASE("softmax cross entropy trivial values") {
  // uniform logits over two classes
  auto logits = Tensor::constant({1, 2}, {0.0, 0.0});
  auto loss = softmax_cross_entropy(logits, {0});
  CHECK(loss->values[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // dominant logit: loss ~ 0, no overflow
  auto big = Tensor::constant({1, 2}, {100.0, 0.0});
  auto loss2 = softmax_cross_entropy(big, {0});
  CHECK(loss2->values[0] >= 0.0);
  CHECK(loss2->values[0] <= 1e-8);

  CHECK_THROWS_AS(softmax_cross_entropy(logits, {2}), ConfigError);
}

TEST_CASE("softmax cross entropy matches high-precision oracle to 1e-10") {
  for (const SoftmaxCase& c : kSoftmaxCases) {
    auto logits = Tensor::constant({c.batch, c.classes}, c.logits);
    auto loss = softmax_cross_entropy(logits, c.labels);
    const double rel = std::fabs(loss->values[0] - c.expected_loss) /
                       std::max(1.0, std::fabs(c.expected_loss));
    CHECK(rel <= 1e-10);
  }
}

TEST_CASE("gradients match central differences for every op") {
  Rng rng(42);

  SUBCASE("add") {
    auto x = random_tensor({3, 2}, rng, true);
    auto y = random_tensor({3, 2}, rng, false);
    CHECK(grad_check([&](const TensorRef& in) { return add(in, y); }, x) <= 1e-4);
  }
  SUBCASE("sub both sides") {
    auto x = random_tensor({4}, rng, true);
    auto y = random_tensor({4}, rng, false);
    CHECK(grad_check([&](const TensorRef& in) { return sub(in, y); }, x) <= 1e-4);
    CHECK(grad_check([&](const TensorRef& in) { return sub(y, in); }, x) <= 1e-4);
  }
  SUBCASE("relu away from the kink") {
    auto x = random_tensor({5, 3}, rng, true);
    for (double& v : x->values) {
      if (std::fabs(v) < 0.05) v += 0.1;  // keep clear of the nondifferentiable point
    }
    CHECK(grad_check([](const TensorRef& in) { return relu(in); }, x) <= 1e-4);
  }
  SUBCASE("mean_all") {
    auto x = random_tensor({2, 3, 2}, rng, true);
    CHECK(grad_check([](const TensorRef& in) { return mean_all(in); }, x) <= 1e-4);
  }
  SUBCASE("maxpool each axis") {
    for (std::size_t axis = 0; axis < 3; ++axis) {
      auto x = random_tensor({3, 4, 2}, rng, true);
      CHECK(grad_check(
                [axis](const TensorRef& in) { return maxpool_over_axis(in, axis).values; }, x) <=
            1e-4);
    }
  }
  SUBCASE("reshape") {
    auto x = random_tensor({2, 6}, rng, true);
    CHECK(grad_check([](const TensorRef& in) { return reshape(in, {3, 4}); }, x) <= 1e-4);
  }
  SUBCASE("gather_rows with duplicates") {
    auto x = random_tensor({4, 3}, rng, true);
    const std::vector<std::size_t> rows = {2, 0, 2, 3};
    CHECK(grad_check([&](const TensorRef& in) { return gather_rows(in, rows); }, x) <= 1e-4);
  }
  SUBCASE("concat_cols both sides") {
    auto x = random_tensor({3, 2}, rng, true);
    auto y = random_tensor({3, 4}, rng, false);
    CHECK(grad_check([&](const TensorRef& in) { return concat_cols(in, y); }, x) <= 1e-4);
    CHECK(grad_check([&](const TensorRef& in) { return concat_cols(y, in); }, x) <= 1e-4);
  }
  SUBCASE("concat_rows") {
    auto x = random_tensor({2, 3}, rng, true);
    auto y = random_tensor({4, 3}, rng, false);
    CHECK(grad_check([&](const TensorRef& in) { return concat_rows({in, y, in}); }, x) <= 1e-4);
  }
  SUBCASE("softmax cross entropy") {
    auto x = random_tensor({3, 5}, rng, true);
    const std::vector<std::size_t> labels = {4, 0, 2};
    CHECK(grad_check([&](const TensorRef& in) { return softmax_cross_entropy(in, labels); }, x) <=
          1e-4);
  }
}

TEST_CASE("backward accumulates through shared subgraphs") {
  auto x = Tensor::param({2}, {3.0, -1.0});
  auto doubled = add(x, x);
  auto loss = mean_all(doubled);
  backward(loss);
  // d/dx mean(2x) = 2/n = 1
  CHECK(x->grad[0] == doctest::Approx(1.0));
  CHECK(x->grad[1] == doctest::Approx(1.0));
  CHECK_THROWS_AS(backward(doubled), DimensionError);
}

TEST_CASE("forward pass is deterministic") {
  Rng rng(99);
  auto x = random_tensor({4, 4}, rng, false);
  auto first = maxpool_over_axis(relu(x), 1).values;
  auto second = maxpool_over_axis(relu(x), 1).values;
  CHECK(first->values == second->values);
}
