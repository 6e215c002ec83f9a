#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "semlink/errors.hpp"
#include "semlink/optimizer.hpp"

using namespace semlink;

TEST_CASE("zero gradient leaves fresh parameters unchanged, counter moves") {
  ParamStore ps;
  ps.add("w", Tensor::from({2, 2}, {1, 2, 3, 4}));
  ps.adam_step({Tensor({2, 2})}, AdamConfig{});
  CHECK(ps.get("w").values() == std::vector<double>{1, 2, 3, 4});
  CHECK(ps.step() == 1);
}

TEST_CASE("first step with unit gradient moves by about lr") {
  ParamStore ps;
  ps.add("w", Tensor::scalar(0.0));
  AdamConfig cfg;
  cfg.lr = 0.1;
  ps.adam_step({Tensor::scalar(1.0)}, cfg);
  // Bias correction makes mhat = vhat = 1 at t = 1.
  CHECK(ps.get("w")[0] == doctest::Approx(-0.1).epsilon(1e-6));
}

TEST_CASE("100 steps on (w-3)^2 converge near 3") {
  // Independent scalar recurrence as the oracle.
  double w = 0.0, m = 0.0, v = 0.0;
  const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (int t = 1; t <= 100; ++t) {
    const double g = 2.0 * (w - 3.0);
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mhat = m / (1 - std::pow(b1, t));
    const double vhat = v / (1 - std::pow(b2, t));
    w -= lr * mhat / (std::sqrt(vhat) + eps);
  }
  REQUIRE(std::abs(w - 3.0) < 0.1);

  ParamStore ps;
  ps.add("w", Tensor::scalar(0.0));
  AdamConfig cfg;
  cfg.lr = 0.1;
  for (int t = 1; t <= 100; ++t) {
    const double g = 2.0 * (ps.get("w")[0] - 3.0);
    ps.adam_step({Tensor::scalar(g)}, cfg);
  }
  CHECK(ps.get("w")[0] == doctest::Approx(w).epsilon(1e-12));
  CHECK(std::abs(ps.get("w")[0] - 3.0) < 0.1);
}

TEST_CASE("gradient shape mismatch is a contract error") {
  ParamStore ps;
  ps.add("w", Tensor({2, 2}));
  CHECK_THROWS_AS(ps.adam_step({Tensor({2, 3})}, AdamConfig{}), ContractError);
  CHECK_THROWS_AS(ps.adam_step({}, AdamConfig{}), ContractError);
}

TEST_CASE("duplicate parameter names are rejected") {
  ParamStore ps;
  ps.add("w", Tensor({1}));
  CHECK_THROWS_AS(ps.add("w", Tensor({1})), ContractError);
}
