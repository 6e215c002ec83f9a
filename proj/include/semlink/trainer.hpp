#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "semlink/channel.hpp"
#include "semlink/dataset.hpp"
#include "semlink/losses.hpp"
#include "semlink/model.hpp"
#include "semlink/selection.hpp"
#include "semlink/transmit_path.hpp"

namespace semlink {

enum class CodingMode { kMtc, kStc };

const char* mode_name(CodingMode m);
CodingMode parse_mode(const std::string& name);

struct TrainConfig {
  double learning_rate = 3e-4;
  int batch_size = 32;
  int epochs_stage1 = 600;
  int epochs_stage2 = 900;
  double triplet_margin = 0.3;
  double lambda_reid = 1.0;
  double lambda_color = 0.125;
  double lambda_type = 0.125;
  double snr_low_db = -6.0;
  double snr_high_db = 8.0;
  int pk_identities = 8;  // P
  int pk_views = 4;       // K
  CrossEntropyVariant ce = CrossEntropyVariant::kBinary;
  SensitivityCombine combine = SensitivityCombine::kMagnitude;
  std::uint64_t seed = 1;
  // Parallel links sharing the slot capacity: 1 for the shared multi-task
  // pipeline, K for single-task coding.
  int capacity_streams = 1;

  void validate() const;
};

struct EpochLog {
  int stage = 1;
  int epoch = 0;
  LossReport mean;
  double wall_seconds = 0.0;
};

using EpochSink = std::function<void(const EpochLog&)>;

struct TrainStats {
  std::vector<EpochLog> epochs;
  // Per-batch reports of the final run, for the loss-identity ledger check.
  std::vector<LossReport> batch_reports;
  int skipped_slots = 0;  // stage-2 draws that mapped to budget 0
  int deep_fades = 0;
};

// Stage 1: end-to-end training with complete transmission; each batch sees
// a fresh block-fading slot at an SNR drawn from the training range.
TrainStats train_stage1(Pipeline& pipeline, const Dataset& data,
                        const TrainConfig& cfg, const ChannelConfig& channel,
                        const EpochSink& sink = {});

// Stage 2: retraining under the capacity constraint; every batch draws an
// SNR, maps it to a budget B and transmits the top-B features of s.
TrainStats train_stage2(Pipeline& pipeline, const Dataset& data,
                        const TrainConfig& cfg, const ChannelConfig& channel,
                        const ImportanceVector& importance,
                        const EpochSink& sink = {});

// Task specs for one mode; MTC carries all three heads, STC a single one
// with unit weight.
std::vector<TaskSpec> make_task_specs(const TrainConfig& cfg,
                                      const DatasetConfig& data, CodingMode mode,
                                      TaskKind stc_task = TaskKind::kReid);

}  // namespace semlink
