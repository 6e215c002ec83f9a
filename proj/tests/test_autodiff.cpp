#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstring>

#include "doctest.h"
#include "semlink/autodiff.hpp"
#include "semlink/errors.hpp"
#include "testutil.hpp"

using namespace semlink;
using test::finite_diff;
using test::max_rel_err;
using test::random_tensor;

TEST_CASE("matmul by identity and by hand") {
  Graph g;
  Var eye = g.input(Tensor::from({2, 2}, {1, 0, 0, 1}));
  Var m = g.input(Tensor::from({2, 2}, {1, 2, 3, 4}));
  const Tensor& prod = g.value(g.matmul(eye, m));
  CHECK(prod.values() == std::vector<double>{1, 2, 3, 4});

  Var a = g.input(Tensor::from({1, 2}, {1, 2}));
  Var b = g.input(Tensor::from({2, 1}, {3, 4}));
  CHECK(g.value(g.matmul(a, b))[0] == 11.0);
}

TEST_CASE("matmul rejects mismatched shapes, naming both") {
  Graph g;
  Var a = g.input(Tensor({2, 3}));
  Var b = g.input(Tensor({2, 3}));
  CHECK_THROWS_WITH_AS(g.matmul(a, b),
                       doctest::Contains("[2x3]"), ShapeError);
}

TEST_CASE("matmul gradient matches finite differences") {
  RngStream rng(10);
  const Tensor a0 = random_tensor({4, 3}, rng);
  const Tensor b0 = random_tensor({3, 2}, rng);
  // d sum(a*b) / da and / db
  const auto run = [&](const std::vector<double>& av,
                       const std::vector<double>& bv) {
    Graph g;
    Var a = g.input(Tensor::from({4, 3}, av));
    Var b = g.input(Tensor::from({3, 2}, bv));
    return g.value(g.sum(g.matmul(a, b)))[0];
  };
  Graph g;
  Var a = g.input(a0);
  Var b = g.input(b0);
  Var root = g.sum(g.matmul(a, b));
  g.backward(root);
  const auto fd_a = finite_diff(
      [&](const std::vector<double>& v) { return run(v, b0.values()); },
      a0.values());
  const auto fd_b = finite_diff(
      [&](const std::vector<double>& v) { return run(a0.values(), v); },
      b0.values());
  CHECK(max_rel_err(g.grad(a).values(), fd_a) < 1e-6);
  CHECK(max_rel_err(g.grad(b).values(), fd_b) < 1e-6);
}

TEST_CASE("relu forward and gradient") {
  Graph g;
  Var x = g.input(Tensor::from({1, 3}, {-1, 0, 2}));
  Var y = g.relu(x);
  CHECK(g.value(y).values() == std::vector<double>{0, 0, 2});

  Graph g2;
  Var neg = g2.input(Tensor::from({1, 3}, {-1, -5, -0.5}));
  Var root = g2.sum(g2.relu(neg));
  CHECK(g2.value(root)[0] == 0.0);
  g2.backward(root);
  CHECK(g2.grad(neg).values() == std::vector<double>{0, 0, 0});

  // Gradient vs finite differences away from the kink.
  RngStream rng(11);
  Tensor x0 = random_tensor({2, 5}, rng);
  for (double& v : x0.values()) {
    if (std::abs(v) < 1e-3) v += 0.1;
  }
  Graph g3;
  Var xv = g3.input(x0);
  Var r3 = g3.sum(g3.relu(xv));
  g3.backward(r3);
  const auto fd = finite_diff(
      [&](const std::vector<double>& v) {
        Graph gg;
        return gg.value(gg.sum(gg.relu(gg.input(Tensor::from({2, 5}, v)))))[0];
      },
      x0.values());
  CHECK(max_rel_err(g3.grad(xv).values(), fd) < 1e-6);
}

TEST_CASE("softmax rows are stabilized probability vectors") {
  Graph g;
  Var x = g.input(Tensor::from({1, 2}, {0, 0}));
  const Tensor& y = g.value(g.softmax(x));
  CHECK(y[0] == doctest::Approx(0.5));
  CHECK(y[1] == doctest::Approx(0.5));

  Var big = g.input(Tensor::from({1, 2}, {1000, 0}));
  const Tensor& yb = g.value(g.softmax(big));
  CHECK(yb.all_finite());
  CHECK(yb[0] == doctest::Approx(1.0));
  CHECK(yb[1] == doctest::Approx(0.0));

  RngStream rng(12);
  const Tensor r = random_tensor({8, 6}, rng, -4.0, 4.0);
  Graph g2;
  const Tensor& ys = g2.value(g2.softmax(g2.input(r)));
  for (std::size_t row = 0; row < 8; ++row) {
    double sum = 0.0;
    for (std::size_t j = 0; j < 6; ++j) {
      const double v = ys[row * 6 + j];
      CHECK(v > 0.0);
      CHECK(v < 1.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("softmax gradient matches finite differences within 1e-5") {
  RngStream rng(13);
  const Tensor x0 = random_tensor({3, 4}, rng, -2.0, 2.0);
  const Tensor w = random_tensor({3, 4}, rng);
  const auto run = [&](const std::vector<double>& v) {
    Graph g;
    Var x = g.input(Tensor::from({3, 4}, v));
    return g.value(g.sum(g.mul(g.softmax(x), g.input(w))))[0];
  };
  Graph g;
  Var x = g.input(x0);
  Var root = g.sum(g.mul(g.softmax(x), g.input(w)));
  g.backward(root);
  CHECK(max_rel_err(g.grad(x).values(), finite_diff(run, x0.values())) < 1e-5);
}

TEST_CASE("backward: square and fan-out accumulation") {
  Graph g;
  Var x = g.input(Tensor::scalar(3.0));
  Var sq = g.mul(x, x);
  g.backward(sq);
  CHECK(g.grad(x)[0] == doctest::Approx(6.0));

  Graph g2;
  Var y = g2.input(Tensor::scalar(1.0));
  Var two = g2.add(y, y);
  g2.backward(two);
  CHECK(g2.grad(y)[0] == doctest::Approx(2.0));
}

TEST_CASE("backward requires a scalar root") {
  Graph g;
  Var x = g.input(Tensor({2, 2}));
  CHECK_THROWS_AS(g.backward(x), ContractError);
}

TEST_CASE("two-layer MLP parameter gradients match finite differences") {
  RngStream rng(14);
  const Tensor x = random_tensor({4, 6}, rng);
  const Tensor w1 = random_tensor({6, 5}, rng);
  const Tensor b1 = random_tensor({1, 5}, rng);
  const Tensor w2 = random_tensor({5, 3}, rng);
  const Tensor b2 = random_tensor({1, 3}, rng);

  const auto run = [&](const Tensor& tw1, const Tensor& tb1, const Tensor& tw2,
                       const Tensor& tb2, Graph& g,
                       std::array<Var, 4>& leaves) {
    leaves = {g.input(tw1), g.input(tb1), g.input(tw2), g.input(tb2)};
    Var h = g.relu(g.add_rowwise(g.matmul(g.input(x), leaves[0]), leaves[1]));
    Var out = g.add_rowwise(g.matmul(h, leaves[2]), leaves[3]);
    return g.mean(g.mul(out, out));
  };

  Graph g;
  std::array<Var, 4> leaves;
  Var root = run(w1, b1, w2, b2, g, leaves);
  g.backward(root);

  const Tensor* params[4] = {&w1, &b1, &w2, &b2};
  for (int p = 0; p < 4; ++p) {
    const auto fd = finite_diff(
        [&](const std::vector<double>& v) {
          Tensor t[4] = {w1, b1, w2, b2};
          t[p] = Tensor::from(params[p]->shape(), v);
          Graph gg;
          std::array<Var, 4> lv;
          return gg.value(run(t[0], t[1], t[2], t[3], gg, lv))[0];
        },
        params[p]->values());
    CHECK(max_rel_err(g.grad(leaves[p]).values(), fd) < 1e-4);
  }
}

TEST_CASE("forward passes are bit-deterministic") {
  RngStream rng(15);
  const Tensor x = random_tensor({6, 8}, rng);
  const Tensor w = random_tensor({8, 4}, rng);
  const auto run = [&] {
    Graph g;
    return g.value(g.softmax(g.matmul(g.input(x), g.input(w)))).values();
  };
  const auto a = run();
  const auto b = run();
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("gather/scatter columns and pick_per_row gradients") {
  RngStream rng(16);
  const Tensor x0 = random_tensor({3, 6}, rng);
  const std::vector<std::size_t> cols{1, 4, 5};

  Graph g;
  Var x = g.input(x0);
  Var taken = g.gather_cols(x, cols);
  Var root = g.sum(taken);
  g.backward(root);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 6; ++c) {
      const bool selected = c == 1 || c == 4 || c == 5;
      CHECK(g.grad(x)[r * 6 + c] == (selected ? 1.0 : 0.0));
    }
  }

  Graph g2;
  Var y = g2.input(random_tensor({3, 3}, rng));
  Var spread = g2.scatter_cols(y, cols, 6);
  CHECK(g2.value(spread).cols() == 6);
  CHECK(g2.value(spread)[0] == 0.0);  // unselected column stays zero

  // scatter(gather(x)) preserves selected columns, zeroes the rest
  Graph g3;
  Var x3 = g3.input(x0);
  Var round = g3.scatter_cols(g3.gather_cols(x3, cols), cols, 6);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 6; ++c) {
      const bool selected = c == 1 || c == 4 || c == 5;
      CHECK(g3.value(round)[r * 6 + c] == (selected ? x0[r * 6 + c] : 0.0));
    }
  }

  Graph g4;
  Var x4 = g4.input(x0);
  Var picked = g4.pick_per_row(x4, {2, 0, 5});
  CHECK(g4.value(picked)[0] == x0[2]);
  CHECK(g4.value(picked)[1] == x0[6]);
  CHECK(g4.value(picked)[2] == x0[17]);
}

TEST_CASE("row_power_normalize hits the target power and its gradient checks") {
  RngStream rng(17);
  Tensor x0 = random_tensor({4, 8}, rng, 0.2, 1.0);
  const double target = 5.0;

  Graph g;
  Var x = g.input(x0);
  Var z = g.row_power_normalize(x, target);
  for (std::size_t r = 0; r < 4; ++r) {
    double sq = 0.0;
    for (std::size_t c = 0; c < 8; ++c) sq += g.value(z).at(r, c) * g.value(z).at(r, c);
    CHECK(std::abs(sq - target) / target < 1e-12);
  }

  const Tensor w = random_tensor({4, 8}, rng);
  const auto run = [&](const std::vector<double>& v) {
    Graph gg;
    Var xx = gg.input(Tensor::from({4, 8}, v));
    return gg.value(
        gg.sum(gg.mul(gg.row_power_normalize(xx, target), gg.input(w))))[0];
  };
  Graph g2;
  Var x2 = g2.input(x0);
  Var root = g2.sum(g2.mul(g2.row_power_normalize(x2, target), g2.input(w)));
  g2.backward(root);
  CHECK(max_rel_err(g2.grad(x2).values(), finite_diff(run, x0.values())) <
        1e-4);

  Graph g3;
  Var zero = g3.input(Tensor({1, 4}));
  CHECK_THROWS_AS(g3.row_power_normalize(zero, 1.0), DegenerateInputError);
}

TEST_CASE("complex_scale multiplies interleaved pairs and round-trips") {
  Graph g;
  Var z = g.input(Tensor::from({1, 2}, {1, 1}));  // 1 + 1i
  const Tensor& out = g.value(g.complex_scale(z, {2, 0}));
  CHECK(out[0] == 2.0);
  CHECK(out[1] == 2.0);

  // scale by h then 1/h is the identity
  RngStream rng(18);
  const Tensor x0 = random_tensor({2, 6}, rng);
  const std::complex<double> h{0.8, -0.6};
  Graph g2;
  Var x = g2.input(x0);
  Var round = g2.complex_scale(g2.complex_scale(x, h), 1.0 / h);
  for (std::size_t i = 0; i < x0.size(); ++i) {
    CHECK(g2.value(round)[i] == doctest::Approx(x0[i]).epsilon(1e-12));
  }

  const Tensor w = random_tensor({2, 6}, rng);
  const auto run = [&](const std::vector<double>& v) {
    Graph gg;
    Var xx = gg.input(Tensor::from({2, 6}, v));
    return gg.value(gg.sum(gg.mul(gg.complex_scale(xx, h), gg.input(w))))[0];
  };
  Graph g3;
  Var x3 = g3.input(x0);
  Var root = g3.sum(g3.mul(g3.complex_scale(x3, h), g3.input(w)));
  g3.backward(root);
  CHECK(max_rel_err(g3.grad(x3).values(), finite_diff(run, x0.values())) <
        1e-6);
}

TEST_CASE("first_nonfinite names the earliest bad op") {
  Graph g;
  Var x = g.input(Tensor::from({1, 2}, {-1.0, 2.0}));
  g.log(x);  // log(-1) = NaN
  const auto bad = g.first_nonfinite();
  REQUIRE(bad.has_value());
  CHECK(bad->find("log") != std::string::npos);
}
