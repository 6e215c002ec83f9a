#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "semlink/errors.hpp"
#include "semlink/selection.hpp"
#include "semlink/transmit_path.hpp"
#include "testutil.hpp"

using namespace semlink;

namespace {
ImportanceVector iv(std::vector<double> v) {
  ImportanceVector s;
  s.values = std::move(v);
  s.task_weights = {1.0};
  return s;
}

// Sort-based oracle: indices ordered by (-value, index), first B, sorted.
std::vector<int> top_b_oracle(const std::vector<double>& v, int budget) {
  std::vector<int> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (v[a] != v[b]) return v[a] > v[b];
    return a < b;
  });
  order.resize(budget);
  std::sort(order.begin(), order.end());
  return order;
}
}  // namespace

TEST_CASE("select_top_b examples") {
  CHECK(select_top_b(iv({0.1, 0.9, 0.5}), 2).indices == std::vector<int>{1, 2});
  CHECK(select_top_b(iv({0.1, 0.9, 0.5}), 3).indices ==
        std::vector<int>{0, 1, 2});
  CHECK(select_top_b(iv({0.5, 0.5, 0.1}), 1).indices == std::vector<int>{0});
  CHECK_THROWS_AS(select_top_b(iv({1, 2}), 3), ContractError);
  CHECK_THROWS_AS(select_top_b(iv({1, 2}), 0), ContractError);
}

TEST_CASE("select_top_b equals the sort oracle exhaustively") {
  RngStream rng(1);
  for (int trial = 0; trial < 2000; ++trial) {
    const int L = 1 + static_cast<int>(rng.uniform_int(0, 15));
    std::vector<double> v(L);
    // Coarse values force frequent ties.
    for (double& x : v) x = static_cast<double>(rng.uniform_int(0, 4));
    const int budget = 1 + static_cast<int>(rng.uniform_int(0, L - 1));
    CHECK(select_top_b(iv(v), budget).indices == top_b_oracle(v, budget));
  }
}

TEST_CASE("selection nesting: pattern(B) is a subset of pattern(B+1)") {
  RngStream rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    const int L = 2 + static_cast<int>(rng.uniform_int(0, 14));
    std::vector<double> v(L);
    for (double& x : v) x = rng.uniform(0.0, 1.0);
    for (int budget = 1; budget < L; ++budget) {
      const auto a = select_top_b(iv(v), budget).indices;
      const auto b = select_top_b(iv(v), budget + 1).indices;
      CHECK(std::includes(b.begin(), b.end(), a.begin(), a.end()));
    }
  }
}

TEST_CASE("selection is invariant to positive rescaling of s") {
  RngStream rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(12);
    for (double& x : v) x = rng.uniform(0.0, 1.0);
    std::vector<double> scaled = v;
    const double c = rng.uniform(0.1, 50.0);
    for (double& x : scaled) x *= c;
    for (int budget : {1, 5, 12}) {
      CHECK(select_top_b(iv(v), budget).indices ==
            select_top_b(iv(scaled), budget).indices);
    }
  }
}

TEST_CASE("select_random: determinism, full budget, uniformity") {
  RngStream a(5), b(5);
  CHECK(select_random(16, 5, a).indices == select_random(16, 5, b).indices);

  RngStream c(6);
  const auto full = select_random(8, 8, c);
  CHECK(full.indices == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});

  // Each of 8 indices should appear with frequency 2/8 over many draws.
  RngStream d(7);
  std::vector<int> counts(8, 0);
  const int draws = 10000;
  for (int t = 0; t < draws; ++t) {
    for (int i : select_random(8, 2, d).indices) ++counts[i];
  }
  const double p = 2.0 / 8.0;
  const double se = std::sqrt(p * (1 - p) / draws);
  for (int i = 0; i < 8; ++i) {
    CHECK(std::abs(counts[i] / static_cast<double>(draws) - p) < 3 * se);
  }

  // Sorted, no duplicates.
  RngStream e(8);
  for (int t = 0; t < 100; ++t) {
    const auto pat = select_random(16, 7, e).indices;
    CHECK(std::is_sorted(pat.begin(), pat.end()));
    CHECK(std::adjacent_find(pat.begin(), pat.end()) == pat.end());
  }
}

TEST_CASE("select_sequential") {
  CHECK(select_sequential(8, 3).indices == std::vector<int>{0, 1, 2});
  CHECK(select_sequential(4, 4).indices == std::vector<int>{0, 1, 2, 3});
  CHECK(select_sequential(8, 1).indices == std::vector<int>{0});
  CHECK_THROWS_AS(select_sequential(4, 5), ContractError);
}

TEST_CASE("apply_selection and scatter_received") {
  const std::vector<cplx> f{{1, 1}, {2, 2}, {3, 3}};
  SelectionPattern p;
  p.indices = {1};
  CHECK(apply_selection(f, p) == std::vector<cplx>{{2, 2}});

  const auto spread = scatter_received({{2, 2}}, p, 3);
  CHECK(spread == std::vector<cplx>{{0, 0}, {2, 2}, {0, 0}});

  SelectionPattern full = select_full(3);
  CHECK(apply_selection(f, full) == f);
  CHECK(scatter_received(f, full, 3) == f);

  // Round trip preserves selected entries and zeroes the complement.
  SelectionPattern two;
  two.indices = {0, 2};
  const auto round = scatter_received(apply_selection(f, two), two, 3);
  CHECK(round == std::vector<cplx>{{1, 1}, {0, 0}, {3, 3}});

  SelectionPattern bad;
  bad.indices = {5};
  CHECK_THROWS_AS(apply_selection(f, bad), ContractError);
  CHECK_THROWS_AS(scatter_received({{1, 0}, {2, 0}}, p, 3), ContractError);
}

TEST_CASE("combine_importance: identity, hand example, zeros, linearity") {
  SensitivityVector a{{1, 0}, 0};
  CHECK(combine_importance({a}, {1.0}).values == std::vector<double>{1, 0});

  SensitivityVector s1{{1, 0}, 0}, s2{{0, 8}, 1}, s3{{0, 8}, 2};
  const auto s = combine_importance({s1, s2, s3}, {1.0, 0.125, 0.125});
  CHECK(s.values == std::vector<double>{1, 2});

  const auto zero = combine_importance({s1, s2}, {0.0, 0.0});
  CHECK(zero.values == std::vector<double>{0, 0});

  // combine(alpha * lambda) == alpha * combine(lambda)
  RngStream rng(9);
  std::vector<SensitivityVector> sens(3);
  for (auto& sv : sens) {
    sv.values.resize(6);
    for (double& v : sv.values) v = rng.uniform(0.0, 1.0);
  }
  const std::vector<double> lambdas{0.7, 0.2, 1.3};
  std::vector<double> scaled_lambdas{1.4, 0.4, 2.6};
  const auto base = combine_importance(sens, lambdas);
  const auto doubled = combine_importance(sens, scaled_lambdas);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(doubled.values[i] == doctest::Approx(2.0 * base.values[i]));
  }

  CHECK_THROWS_AS(combine_importance({s1}, {1.0, 2.0}), ContractError);
}

TEST_CASE("task_sensitivity on a linear probe concentrates on the fed column") {
  // A pipeline whose jsc encoder feeds only complex feature j: zero all
  // weights, then wire e[0] to f's real column 2j through the second codec
  // layer, and make the head read the decoded features.
  ModelConfig mc;
  mc.input_dim = 4;
  mc.feature_dim = 4;
  mc.latent_complex = 4;
  mc.encoder_hidden = 4;
  mc.codec_hidden = 4;
  mc.head_hidden = 4;
  mc.tasks = {{TaskKind::kColor, 3, 1.0}};
  Pipeline p(mc, 1);

  const int j = 2;  // concentrate on complex feature 2
  for (std::size_t i = 0; i < p.params().count(); ++i) {
    for (double& v : p.params().entry(i).value.values()) v = 0.0;
  }
  // encoder: identity-ish first column; relu passes positives
  p.params().get("enc.w1").at(0, 0) = 1.0;
  p.params().get("enc.w2").at(0, 0) = 1.0;
  // jsce: route e[0] to f real part of feature j
  p.params().get("jsce.w1").at(0, 0) = 1.0;
  p.params().get("jsce.w2").at(0, 2 * j) = 1.0;
  // jscd: read back that column
  p.params().get("jscd.w1").at(2 * j, 0) = 1.0;
  p.params().get("jscd.w2").at(0, 0) = 1.0;
  // head: class 1 score follows e_hat[0]
  p.params().get("head0.color.w1").at(0, 0) = 1.0;
  p.params().get("head0.color.w2").at(0, 1) = 2.0;

  RngStream rng(4);
  Tensor calib({8, 4});
  for (std::size_t r = 0; r < 8; ++r) calib.at(r, 0) = rng.uniform(0.5, 1.5);

  const SensitivityVector s = task_sensitivity(p, calib, 0);
  REQUIRE(s.values.size() == 4);
  for (int i = 0; i < 4; ++i) {
    if (i == j) continue;
    CHECK(s.values[j] >= 10.0 * s.values[i]);
  }

  // Duplicating the calibration batch leaves the average unchanged.
  Tensor doubled({16, 4});
  for (std::size_t r = 0; r < 16; ++r) {
    for (std::size_t c = 0; c < 4; ++c) doubled.at(r, c) = calib.at(r % 8, c);
  }
  const SensitivityVector s2 = task_sensitivity(p, doubled, 0);
  for (int i = 0; i < 4; ++i) {
    CHECK(s2.values[i] == doctest::Approx(s.values[i]).epsilon(1e-9));
  }
}

TEST_CASE("task_sensitivity of a constant head is the zero vector") {
  ModelConfig mc;
  mc.input_dim = 4;
  mc.feature_dim = 4;
  mc.latent_complex = 4;
  mc.encoder_hidden = 4;
  mc.codec_hidden = 4;
  mc.head_hidden = 4;
  mc.tasks = {{TaskKind::kColor, 3, 1.0}};
  Pipeline p(mc, 2);
  // Zero head weights: probabilities are constant 1/3 regardless of input.
  for (double& v : p.params().get("head0.color.w1").values()) v = 0.0;
  for (double& v : p.params().get("head0.color.w2").values()) v = 0.0;
  for (double& v : p.params().get("head0.color.b1").values()) v = 0.0;
  for (double& v : p.params().get("head0.color.b2").values()) v = 0.0;

  RngStream rng(5);
  const SensitivityVector s =
      task_sensitivity(p, test::random_tensor({6, 4}, rng, 0.1, 1.0), 0);
  for (double v : s.values) CHECK(v == 0.0);
}

TEST_CASE("task_sensitivity contract errors") {
  ModelConfig mc;
  mc.input_dim = 4;
  mc.feature_dim = 4;
  mc.latent_complex = 4;
  mc.encoder_hidden = 4;
  mc.codec_hidden = 4;
  mc.head_hidden = 4;
  mc.tasks = {{TaskKind::kColor, 3, 1.0}};
  Pipeline p(mc, 3);
  CHECK_THROWS_AS(task_sensitivity(p, Tensor({0, 4}), 0), ContractError);
  RngStream rng(6);
  CHECK_THROWS_AS(
      task_sensitivity(p, test::random_tensor({2, 4}, rng), 1),
      ContractError);
  p.params().get("enc.w1")[0] = std::nan("");
  CHECK_THROWS_AS(
      task_sensitivity(p, test::random_tensor({2, 4}, rng), 0),
      ContractError);
}
