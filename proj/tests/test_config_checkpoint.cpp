#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <cstring>
#include <filesystem>

#include "doctest.h"
#include "semlink/checkpoint.hpp"
#include "semlink/config.hpp"
#include "semlink/errors.hpp"
#include "semlink/experiment.hpp"
#include "semlink/rng.hpp"

using namespace semlink;

namespace {
std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("empty config text yields all documented defaults") {
  const ExperimentConfig c = parse_config("");
  CHECK(c.dataset.num_identities == 16);
  CHECK(c.dataset.num_colors == 4);
  CHECK(c.dataset.views_per_identity == 8);
  CHECK(c.feature_dim == 64);
  CHECK(c.latent_features == 32);
  CHECK(c.channel.rician_factor == 2.0);
  CHECK(c.channel.avg_power == 1.0);
  CHECK(c.channel.bits_per_feature == 64);
  CHECK(c.channel.bandwidth == 2048.0);
  CHECK(c.train.learning_rate == 3e-4);
  CHECK(c.train.batch_size == 32);
  CHECK(c.train.lambda_reid == 1.0);
  CHECK(c.train.lambda_color == 0.125);
  CHECK(c.train.lambda_type == 0.125);
  CHECK(c.train.triplet_margin == 0.3);
  CHECK(c.snr_grid_db == std::vector<double>{-6, -4, -2, 0, 2, 4, 6, 8});
  CHECK(c.methods.size() == 4);
  CHECK(c.modes.size() == 2);
  CHECK(c.num_seeds == 5);
  CHECK(c.eval_realizations == 200);
}

TEST_CASE("single-point grid and overrides parse") {
  const ExperimentConfig c = parse_config(
      "[experiment]\n"
      "snr_grid_db: 0\n"
      "methods: fir, full\n"
      "modes: mtc\n"
      "num_seeds: 2\n"
      "\n"
      "[dataset]\n"
      "identities: 8  # inline comment\n");
  CHECK(c.snr_grid_db == std::vector<double>{0});
  CHECK(c.methods.size() == 2);
  CHECK(c.modes == std::vector<CodingMode>{CodingMode::kMtc});
  CHECK(c.num_seeds == 2);
  CHECK(c.dataset.num_identities == 8);
}

TEST_CASE("invalid configs name the offending field") {
  CHECK_THROWS_WITH_AS(parse_config("[experiment]\nnum_seeds: 0\n"),
                       doctest::Contains("num_seeds"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[experiment]\nsnr_grid_db:\n"),
                       doctest::Contains("snr_grid_db"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[dataset]\nnoise_std: -1\n"),
                       doctest::Contains("noise_std"), ConfigError);
}

TEST_CASE("unknown keys and sections are hard errors listing valid names") {
  CHECK_THROWS_WITH_AS(parse_config("[dataset]\nbogus: 1\n"),
                       doctest::Contains("views_per_identity"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[nowhere]\nx: 1\n"),
                       doctest::Contains("valid sections"), ConfigError);
  CHECK_THROWS_AS(parse_config("stray: 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[train]\nlearning_rate: fast\n"), ConfigError);
}

TEST_CASE("canonical config reparses to the same hash") {
  ExperimentConfig c = default_config();
  c.dataset.noise_std = 0.73;
  c.snr_grid_db = {-3, 1.5};
  c.train.ce = CrossEntropyVariant::kCategorical;
  c.train.combine = SensitivityCombine::kSigned;
  const std::string text = canonical_config(c);
  const ExperimentConfig back = parse_config(text);
  CHECK(canonical_config(back) == text);
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_hash(back) != config_hash(default_config()));
}

TEST_CASE("load_config reads files and rejects missing ones") {
  const std::string path = temp_path("semlink_cfg_test.txt");
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    std::fputs("[experiment]\nnum_seeds: 3\n", f);
    std::fclose(f);
  }
  CHECK(load_config(path).num_seeds == 3);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_config(path), IoError);
}

TEST_CASE("checkpoint round trip is bit-exact") {
  ModelConfig mc;
  mc.input_dim = 36;
  mc.feature_dim = 12;
  mc.latent_complex = 6;
  mc.encoder_hidden = 10;
  mc.codec_hidden = 8;
  mc.head_hidden = 6;
  mc.tasks = {{TaskKind::kReid, 4, 1.0}, {TaskKind::kColor, 2, 0.125}};
  Pipeline p(mc, 99);
  DatasetConfig dc;
  dc.seed = 1234;
  dc.noise_std = 0.37;

  const std::string path = temp_path("semlink_ckpt_test.bin");
  save_checkpoint(path, p, dc);
  const Checkpoint c = load_checkpoint(path);
  std::filesystem::remove(path);

  CHECK(c.dataset.seed == 1234);
  CHECK(c.dataset.noise_std == 0.37);
  CHECK(c.model.feature_dim == 12);
  REQUIRE(c.model.tasks.size() == 2);
  CHECK(c.model.tasks[1].kind == TaskKind::kColor);
  CHECK(c.model.tasks[1].weight == 0.125);

  REQUIRE(c.params.size() == p.params().count());
  for (std::size_t i = 0; i < c.params.size(); ++i) {
    const auto& [name, value] = c.params[i];
    CHECK(name == p.params().entry(i).name);
    REQUIRE(value.same_shape(p.params().entry(i).value));
    CHECK(std::memcmp(value.data(), p.params().entry(i).value.data(),
                      value.size() * sizeof(double)) == 0);
  }

  const Pipeline restored = restore_pipeline(c);
  for (std::size_t i = 0; i < restored.params().count(); ++i) {
    CHECK(std::memcmp(restored.params().entry(i).value.data(),
                      p.params().entry(i).value.data(),
                      p.params().entry(i).value.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("corrupt checkpoints are rejected") {
  const std::string path = temp_path("semlink_ckpt_bad.bin");
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    std::fputs("not a checkpoint", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_checkpoint(path), IoError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), IoError);
}

TEST_CASE("importance vector round trip is value-exact") {
  ImportanceVector s;
  s.task_weights = {1.0, 0.125, 0.125};
  RngStream rng(5);
  for (int i = 0; i < 32; ++i) s.values.push_back(rng.uniform(0.0, 1e-3));
  s.values[7] = 0.0;

  const std::string path = temp_path("semlink_importance_test.txt");
  save_importance(path, s);
  const ImportanceVector back = load_importance(path);
  std::filesystem::remove(path);

  CHECK(back.task_weights == s.task_weights);
  REQUIRE(back.values.size() == s.values.size());
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    CHECK(back.values[i] == s.values[i]);
  }
}

TEST_CASE("run_dir is stable in config and seed") {
  const ExperimentConfig c = default_config();
  const std::string a = run_dir(c, CodingMode::kMtc, 3, "out");
  CHECK(a == run_dir(c, CodingMode::kMtc, 3, "out"));
  CHECK(a != run_dir(c, CodingMode::kStc, 3, "out"));
  CHECK(a != run_dir(c, CodingMode::kMtc, 4, "out"));
  ExperimentConfig d = c;
  d.train.learning_rate = 1e-3;
  CHECK(a != run_dir(d, CodingMode::kMtc, 3, "out"));
  CHECK(a.rfind("out/mtc-seed3-", 0) == 0);
}
