#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>

#include "doctest.h"
#include "semlink/errors.hpp"
#include "semlink/trainer.hpp"

using namespace semlink;

namespace {

struct Setup {
  DatasetConfig dc;
  ModelConfig mc;
  TrainConfig tc;
  ChannelConfig ch;
  Dataset data;
};

Setup small_setup(std::uint64_t seed) {
  Setup s;
  s.dc.num_identities = 4;
  s.dc.num_colors = 2;
  s.dc.num_types = 2;
  s.dc.views_per_identity = 6;
  s.dc.image_width = 6;
  s.dc.image_height = 6;
  s.dc.noise_std = 0.4;
  s.dc.seed = seed;

  s.mc.input_dim = s.dc.pixels();
  s.mc.feature_dim = 12;
  s.mc.latent_complex = 6;
  s.mc.encoder_hidden = 16;
  s.mc.codec_hidden = 12;
  s.mc.head_hidden = 8;

  s.tc.batch_size = 8;
  s.tc.pk_identities = 2;
  s.tc.pk_views = 4;
  s.tc.epochs_stage1 = 4;
  s.tc.epochs_stage2 = 3;
  s.tc.learning_rate = 3e-3;
  s.tc.seed = seed;

  s.ch.bandwidth = 384.0;  // B binds below 0 dB at L = 6

  s.mc.tasks = make_task_specs(s.tc, s.dc, CodingMode::kMtc);
  s.data = generate_dataset(s.dc);
  return s;
}

bool params_equal(const ParamStore& a, const ParamStore& b) {
  if (a.count() != b.count()) return false;
  for (std::size_t i = 0; i < a.count(); ++i) {
    const Tensor& ta = a.entry(i).value;
    const Tensor& tb = b.entry(i).value;
    if (!ta.same_shape(tb)) return false;
    if (std::memcmp(ta.data(), tb.data(), ta.size() * sizeof(double)) != 0) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("zero epochs leave the model unchanged") {
  Setup s = small_setup(1);
  s.tc.epochs_stage1 = 0;
  Pipeline p(s.mc, 11);
  Pipeline q(s.mc, 11);
  train_stage1(p, s.data, s.tc, s.ch);
  CHECK(params_equal(p.params(), q.params()));
}

TEST_CASE("stage-1 training lowers the loss") {
  Setup s = small_setup(2);
  s.tc.epochs_stage1 = 8;
  Pipeline p(s.mc, 12);
  const TrainStats stats = train_stage1(p, s.data, s.tc, s.ch);
  REQUIRE(stats.epochs.size() == 8);
  CHECK(stats.epochs.back().mean.e2e < stats.epochs.front().mean.e2e);
  for (const LossReport& r : stats.batch_reports) {
    CHECK(r.e2e >= 0.0);
    CHECK(std::isfinite(r.e2e));
    CHECK(std::abs(r.e2e - (r.task + r.channel)) < 1e-12);
    CHECK(std::abs(r.task - (r.lambdas[0] * r.reid + r.lambdas[1] * r.color +
                             r.lambdas[2] * r.type)) < 1e-12);
  }
}

TEST_CASE("same seed gives bit-identical trained parameters") {
  Setup s = small_setup(3);
  Pipeline a(s.mc, 13);
  Pipeline b(s.mc, 13);
  train_stage1(a, s.data, s.tc, s.ch);
  train_stage1(b, s.data, s.tc, s.ch);
  CHECK(params_equal(a.params(), b.params()));

  ImportanceVector s_vec;
  s_vec.values.assign(6, 0.5);
  s_vec.task_weights = {1.0};
  train_stage2(a, s.data, s.tc, s.ch, s_vec);
  train_stage2(b, s.data, s.tc, s.ch, s_vec);
  CHECK(params_equal(a.params(), b.params()));
}

TEST_CASE("stage 2 with B = L everywhere ignores the importance ordering") {
  Setup s = small_setup(4);
  s.ch.bandwidth = 1 << 16;  // budget saturates at L across the range
  Pipeline a(s.mc, 14);
  train_stage1(a, s.data, s.tc, s.ch);
  Pipeline b = a;

  ImportanceVector uniform;
  uniform.values.assign(6, 1.0);
  uniform.task_weights = {1.0};
  ImportanceVector jagged;
  jagged.values = {0.9, 0.1, 0.5, 0.7, 0.2, 0.4};
  jagged.task_weights = {1.0};

  train_stage2(a, s.data, s.tc, s.ch, uniform);
  train_stage2(b, s.data, s.tc, s.ch, jagged);
  CHECK(params_equal(a.params(), b.params()));
}

TEST_CASE("stage 2 requires an importance vector of length L") {
  Setup s = small_setup(5);
  Pipeline p(s.mc, 15);
  ImportanceVector wrong;
  wrong.values.assign(4, 1.0);
  CHECK_THROWS_AS(train_stage2(p, s.data, s.tc, s.ch, wrong), ContractError);
}

TEST_CASE("a poisoned parameter aborts with a diagnostic naming the op") {
  Setup s = small_setup(6);
  Pipeline p(s.mc, 16);
  // The reid head feeds the loss directly, so the NaN cannot be masked by a
  // downstream relu.
  p.params().get("head0.reid.w2")[0] = std::nan("");
  try {
    train_stage1(p, s.data, s.tc, s.ch);
    FAIL("expected TrainingDiverged");
  } catch (const TrainingDiverged& e) {
    // The poisoned leaf itself is the first non-finite node on the tape.
    CHECK(std::string(e.what()).find("first bad op: input") !=
          std::string::npos);
  }
}

TEST_CASE("zero-budget slots are resampled and counted") {
  Setup s = small_setup(7);
  // Budget is 0 below ~0 dB but positive at the top of the range.
  s.ch.bandwidth = 64.0;
  s.tc.snr_low_db = -6.0;
  s.tc.snr_high_db = 8.0;
  Pipeline p(s.mc, 17);
  train_stage1(p, s.data, s.tc, s.ch);
  ImportanceVector iv;
  iv.values.assign(6, 1.0);
  iv.task_weights = {1.0};
  const TrainStats stats = train_stage2(p, s.data, s.tc, s.ch, iv);
  CHECK(stats.skipped_slots > 0);
}

TEST_CASE("batch composition violations are config errors") {
  Setup s = small_setup(8);
  s.tc.pk_views = 8;  // identities only have 4 train views
  s.tc.batch_size = 16;
  Pipeline p(s.mc, 18);
  CHECK_THROWS_AS(train_stage1(p, s.data, s.tc, s.ch), ConfigError);

  Setup s2 = small_setup(9);
  s2.tc.pk_identities = 3;  // 3 * 4 != 8
  Pipeline q(s2.mc, 19);
  CHECK_THROWS_AS(train_stage1(q, s2.data, s2.tc, s2.ch), ConfigError);
}

TEST_CASE("task spec construction per mode") {
  TrainConfig tc;
  DatasetConfig dc;
  const auto mtc = make_task_specs(tc, dc, CodingMode::kMtc);
  REQUIRE(mtc.size() == 3);
  CHECK(mtc[0].kind == TaskKind::kReid);
  CHECK(mtc[0].classes == dc.num_identities);
  CHECK(mtc[0].weight == 1.0);
  CHECK(mtc[1].weight == 0.125);
  CHECK(mtc[2].weight == 0.125);

  const auto stc = make_task_specs(tc, dc, CodingMode::kStc, TaskKind::kColor);
  REQUIRE(stc.size() == 1);
  CHECK(stc[0].kind == TaskKind::kColor);
  CHECK(stc[0].classes == dc.num_colors);
  CHECK(stc[0].weight == 1.0);
}
