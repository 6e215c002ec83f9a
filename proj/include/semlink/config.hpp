#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semlink/channel.hpp"
#include "semlink/dataset.hpp"
#include "semlink/model.hpp"
#include "semlink/trainer.hpp"

namespace semlink {

// Fully resolved experiment description. Loaded from a sectioned
// "key: value" text file; every key has a default, unknown keys are hard
// errors.
struct ExperimentConfig {
  DatasetConfig dataset;
  // Model sizes; input_dim and tasks are derived from the dataset and mode.
  int feature_dim = 64;      // N
  int latent_features = 32;  // L
  int encoder_hidden = 96;
  int codec_hidden = 64;
  int head_hidden = 32;
  ChannelConfig channel;
  TrainConfig train;
  std::vector<double> snr_grid_db{-6, -4, -2, 0, 2, 4, 6, 8};
  std::vector<SelectionPolicy> methods{
      SelectionPolicy::kFir, SelectionPolicy::kRandom,
      SelectionPolicy::kSequential, SelectionPolicy::kFull};
  std::vector<CodingMode> modes{CodingMode::kMtc, CodingMode::kStc};
  int num_seeds = 5;
  std::uint64_t base_seed = 1;
  int eval_realizations = 200;
  int workers = 0;  // 0 = one per hardware thread
  std::string output_dir = "runs";

  ModelConfig model_config(CodingMode mode,
                           TaskKind stc_task = TaskKind::kReid) const;
  void validate() const;
};

ExperimentConfig default_config();

// Parses config text; empty text yields all defaults.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Canonical echo of a resolved config; reparsing reproduces the config.
std::string canonical_config(const ExperimentConfig& cfg);

// FNV-1a over the canonical form; names run directories.
std::uint64_t config_hash(const ExperimentConfig& cfg);

}  // namespace semlink
