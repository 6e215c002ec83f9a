#include "semlink/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "semlink/errors.hpp"

namespace semlink {

const char* mode_name(CodingMode m) {
  return m == CodingMode::kMtc ? "mtc" : "stc";
}

CodingMode parse_mode(const std::string& name) {
  if (name == "mtc") return CodingMode::kMtc;
  if (name == "stc") return CodingMode::kStc;
  throw ConfigError("unknown mode '" + name + "' (expected mtc or stc)");
}

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw ConfigError("train: learning_rate must be > 0");
  if (batch_size < 4) throw ConfigError("train: batch_size must be >= 4");
  if (epochs_stage1 < 0 || epochs_stage2 < 0) {
    throw ConfigError("train: epoch counts must be >= 0");
  }
  if (triplet_margin <= 0.0) {
    throw ConfigError("train: triplet_margin must be > 0");
  }
  if (lambda_reid < 0.0 || lambda_color < 0.0 || lambda_type < 0.0) {
    throw ConfigError("train: task weights must be >= 0");
  }
  if (snr_high_db < snr_low_db) {
    throw ConfigError("train: snr_high_db must be >= snr_low_db");
  }
  if (pk_identities < 2 || pk_views < 2) {
    throw ConfigError(
        "train: pk_identities and pk_views must be >= 2 so batches support "
        "triplet mining");
  }
  if (pk_identities * pk_views != batch_size) {
    throw ConfigError("train: pk_identities * pk_views must equal batch_size");
  }
  if (capacity_streams < 1) {
    throw ConfigError("train: capacity_streams must be >= 1");
  }
}

std::vector<TaskSpec> make_task_specs(const TrainConfig& cfg,
                                      const DatasetConfig& data,
                                      CodingMode mode, TaskKind stc_task) {
  std::vector<TaskSpec> tasks;
  if (mode == CodingMode::kMtc) {
    tasks.push_back({TaskKind::kReid, data.num_identities, cfg.lambda_reid});
    tasks.push_back({TaskKind::kColor, data.num_colors, cfg.lambda_color});
    tasks.push_back({TaskKind::kType, data.num_types, cfg.lambda_type});
  } else {
    int classes = 0;
    switch (stc_task) {
      case TaskKind::kReid: classes = data.num_identities; break;
      case TaskKind::kColor: classes = data.num_colors; break;
      case TaskKind::kType: classes = data.num_types; break;
    }
    tasks.push_back({stc_task, classes, 1.0});
  }
  return tasks;
}

namespace {

// P identities x K views per batch; sampling is deterministic in the stream.
class PkSampler {
 public:
  PkSampler(const Dataset& data, const TrainConfig& cfg)
      : data_(data), cfg_(cfg) {
    by_identity_.resize(data.cfg.num_identities);
    for (std::size_t i = 0; i < data.train.size(); ++i) {
      by_identity_[data.train[i].identity].push_back(i);
    }
    for (int id = 0; id < data.cfg.num_identities; ++id) {
      if (static_cast<int>(by_identity_[id].size()) < cfg.pk_views) {
        throw ConfigError(
            "train: identity " + std::to_string(id) + " has " +
            std::to_string(by_identity_[id].size()) +
            " train views, need >= pk_views = " + std::to_string(cfg.pk_views));
      }
    }
    if (data.cfg.num_identities < cfg.pk_identities) {
      throw ConfigError("train: pk_identities exceeds dataset identities");
    }
  }

  int batches_per_epoch() const {
    return std::max<int>(
        1, static_cast<int>(data_.train.size()) / cfg_.batch_size);
  }

  std::vector<std::size_t> next_batch(RngStream& rng) {
    std::vector<std::size_t> batch;
    batch.reserve(cfg_.batch_size);
    for (int p = 0; p < cfg_.pk_identities; ++p) {
      if (cursor_ >= id_order_.size()) {
        id_order_.resize(by_identity_.size());
        std::iota(id_order_.begin(), id_order_.end(), 0);
        rng.shuffle(id_order_);
        cursor_ = 0;
      }
      const int id = id_order_[cursor_++];
      std::vector<std::size_t> views = by_identity_[id];
      rng.shuffle(views);
      for (int k = 0; k < cfg_.pk_views; ++k) batch.push_back(views[k]);
    }
    return batch;
  }

 private:
  const Dataset& data_;
  const TrainConfig& cfg_;
  std::vector<std::vector<std::size_t>> by_identity_;
  std::vector<int> id_order_;
  std::size_t cursor_ = 0;
};

struct StageSetup {
  int stage = 1;
  int epochs = 0;
  const ImportanceVector* importance = nullptr;
};

TrainStats run_stage(Pipeline& pipeline, const Dataset& data,
                     const TrainConfig& cfg, const ChannelConfig& channel,
                     const StageSetup& setup, const EpochSink& sink) {
  cfg.validate();
  channel.validate();
  const int L = pipeline.config().latent_complex;
  if (setup.importance != nullptr &&
      static_cast<int>(setup.importance->values.size()) != L) {
    throw ContractError("train_stage2: importance length " +
                        std::to_string(setup.importance->values.size()) +
                        " != L = " + std::to_string(L));
  }
  const std::vector<TaskSpec>& tasks = pipeline.config().tasks;
  LossSettings loss_settings{cfg.triplet_margin, cfg.ce};
  AdamConfig adam;
  adam.lr = cfg.learning_rate;

  PkSampler sampler(data, cfg);
  RngStream sample_rng(cfg.seed, 0xba, static_cast<std::uint64_t>(setup.stage));
  RngStream slot_rng(cfg.seed, 0xce, static_cast<std::uint64_t>(setup.stage));

  TrainStats stats;
  const SelectionPattern full = select_full(L);
  for (int epoch = 0; epoch < setup.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    // Halve the learning rate at each third of the stage.
    const int decay_steps = setup.epochs > 0 ? (3 * epoch) / setup.epochs : 0;
    adam.lr = cfg.learning_rate * std::pow(0.5, decay_steps);

    LossReport epoch_mean;
    const int nb = sampler.batches_per_epoch();
    for (int bi = 0; bi < nb; ++bi) {
      const Batch batch = make_batch(data.train, sampler.next_batch(sample_rng));

      const double snr_db = slot_rng.uniform(cfg.snr_low_db, cfg.snr_high_db);
      SelectionPattern pattern = full;
      if (setup.importance != nullptr) {
        ChannelConfig slot_cfg = channel;
        slot_cfg.snr_db = snr_db;
        int budget = stream_budget(slot_cfg, L, cfg.capacity_streams);
        int guard = 0;
        while (budget == 0) {
          // Unusable slot: resample the SNR and count the event.
          ++stats.skipped_slots;
          if (++guard > 1000) {
            throw ConfigError(
                "train_stage2: budget is 0 across the SNR range; raise "
                "slot_duration*bandwidth");
          }
          slot_cfg.snr_db = slot_rng.uniform(cfg.snr_low_db, cfg.snr_high_db);
          budget = stream_budget(slot_cfg, L, cfg.capacity_streams);
        }
        pattern = select_top_b(*setup.importance, budget);
      }

      cplx h = sample_rician(channel.rician_factor, slot_rng);
      while (std::abs(h) <= 1e-9) {
        ++stats.deep_fades;
        h = sample_rician(channel.rician_factor, slot_rng);
      }
      const double sigma2 = noise_sigma2(snr_db, channel.avg_power);
      const Tensor noise = draw_noise(batch.images.rows(), pattern.budget(),
                                      sigma2, slot_rng);

      Graph g;
      Pipeline::Bound bound = pipeline.bind(g);
      Var x = g.input(batch.images);
      PathResult path =
          forward_path(bound, x, pattern, channel.avg_power, h, &noise);
      LossVars losses = compose_losses(g, tasks, path.probs, batch, path.e,
                                       path.e_hat, loss_settings);
      const double e2e = g.value(losses.e2e)[0];
      if (!std::isfinite(e2e)) {
        const auto bad = g.first_nonfinite();
        throw TrainingDiverged("non-finite loss at stage " +
                               std::to_string(setup.stage) + " epoch " +
                               std::to_string(epoch) + "; first bad op: " +
                               bad.value_or("loss accumulation"));
      }
      g.backward(losses.e2e);
      pipeline.params().adam_step(pipeline.collect_grads(g, bound), adam);

      const LossReport report = report_losses(g, losses, tasks);
      stats.batch_reports.push_back(report);
      epoch_mean.e2e += report.e2e / nb;
      epoch_mean.task += report.task / nb;
      epoch_mean.channel += report.channel / nb;
      epoch_mean.reid += report.reid / nb;
      epoch_mean.color += report.color / nb;
      epoch_mean.type += report.type / nb;
      epoch_mean.lambdas = report.lambdas;
    }

    EpochLog log;
    log.stage = setup.stage;
    log.epoch = epoch;
    log.mean = epoch_mean;
    log.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    stats.epochs.push_back(log);
    if (sink) sink(log);
  }
  return stats;
}

}  // namespace

TrainStats train_stage1(Pipeline& pipeline, const Dataset& data,
                        const TrainConfig& cfg, const ChannelConfig& channel,
                        const EpochSink& sink) {
  StageSetup setup;
  setup.stage = 1;
  setup.epochs = cfg.epochs_stage1;
  return run_stage(pipeline, data, cfg, channel, setup, sink);
}

TrainStats train_stage2(Pipeline& pipeline, const Dataset& data,
                        const TrainConfig& cfg, const ChannelConfig& channel,
                        const ImportanceVector& importance,
                        const EpochSink& sink) {
  StageSetup setup;
  setup.stage = 2;
  setup.epochs = cfg.epochs_stage2;
  setup.importance = &importance;
  return run_stage(pipeline, data, cfg, channel, setup, sink);
}

}  // namespace semlink
