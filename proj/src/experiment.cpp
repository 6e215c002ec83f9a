#include "semlink/experiment.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "semlink/errors.hpp"
#include "semlink/transmit_path.hpp"

namespace semlink {

namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kDatasetSalt = 0xda7a;
constexpr std::uint64_t kInitSalt = 0x111;
constexpr std::uint64_t kTrainSalt = 0x7c;
constexpr std::uint64_t kEvalSalt = 0xe7a1;

// Pipelines inside one cell: MTC has the single shared pipeline at slot 0;
// STC has one pipeline per task.
std::vector<TaskKind> cell_tasks(CodingMode mode) {
  if (mode == CodingMode::kMtc) return {TaskKind::kReid};
  return {TaskKind::kReid, TaskKind::kColor, TaskKind::kType};
}

std::uint64_t pipeline_id(CodingMode mode, std::size_t slot) {
  return (mode == CodingMode::kMtc ? 0 : 4) + slot;
}

std::string ckpt_path(const std::string& dir, CodingMode mode, int stage,
                      std::size_t slot) {
  std::string name = "stage" + std::to_string(stage);
  if (mode == CodingMode::kStc) {
    name += std::string("_") + task_name(cell_tasks(mode)[slot]);
  }
  return dir + "/" + name + ".ckpt";
}

std::string importance_path(const std::string& dir, CodingMode mode,
                            std::size_t slot) {
  std::string name = "importance";
  if (mode == CodingMode::kStc) {
    name += std::string("_") + task_name(cell_tasks(mode)[slot]);
  }
  return dir + "/" + name + ".txt";
}

std::string log_path(const std::string& dir, CodingMode mode,
                     std::size_t slot) {
  std::string name = "train_log";
  if (mode == CodingMode::kStc) {
    name += std::string("_") + task_name(cell_tasks(mode)[slot]);
  }
  return dir + "/" + name + ".csv";
}

void append_epoch_logs(const std::string& path,
                       const std::vector<EpochLog>& epochs) {
  const bool fresh = !fs::exists(path);
  std::ofstream os(path, std::ios::app);
  if (!os) throw IoError("cannot write training log '" + path + "'");
  if (fresh) {
    os << "stage,epoch,loss_e2e,loss_task,loss_channel,loss_reid,loss_color,"
          "loss_type,wall_s\n";
  }
  char buf[256];
  for (const EpochLog& e : epochs) {
    std::snprintf(buf, sizeof buf,
                  "%d,%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.3f\n", e.stage,
                  e.epoch, e.mean.e2e, e.mean.task, e.mean.channel,
                  e.mean.reid, e.mean.color, e.mean.type, e.wall_seconds);
    os << buf;
  }
}

void write_resolved_config(const ExperimentConfig& cfg,
                           const std::string& dir) {
  std::ofstream os(dir + "/config_resolved.txt");
  if (!os) throw IoError("cannot write resolved config in '" + dir + "'");
  os << canonical_config(cfg);
}

Dataset cell_dataset(const ExperimentConfig& cfg, std::uint64_t seed) {
  DatasetConfig dc = cfg.dataset;
  dc.seed = mix64(seed, kDatasetSalt);
  return generate_dataset(dc);
}

TrainConfig cell_train_config(const ExperimentConfig& cfg, CodingMode mode,
                              std::uint64_t seed, std::size_t slot) {
  TrainConfig tc = cfg.train;
  tc.seed = mix64(seed, kTrainSalt, pipeline_id(mode, slot));
  // The parallel single-task links share the slot capacity equally.
  tc.capacity_streams =
      mode == CodingMode::kStc ? static_cast<int>(cell_tasks(mode).size()) : 1;
  return tc;
}

Pipeline make_pipeline(const ExperimentConfig& cfg, CodingMode mode,
                       std::uint64_t seed, std::size_t slot) {
  const TaskKind task = cell_tasks(mode)[slot];
  return Pipeline(cfg.model_config(mode, task),
                  mix64(seed, kInitSalt, pipeline_id(mode, slot)));
}

// Eq.-style ranking: per-task sensitivities from the held-out samples,
// weighted by the task lambdas.
ImportanceVector rank_pipeline(const Pipeline& pipeline, const Dataset& data,
                               const ExperimentConfig& cfg) {
  std::vector<SyntheticSample> held_out = data.query;
  held_out.insert(held_out.end(), data.gallery.begin(), data.gallery.end());
  if (held_out.size() > 256) held_out.resize(256);
  const Batch calib = make_batch(held_out);

  std::vector<SensitivityVector> sens;
  std::vector<double> lambdas;
  for (std::size_t t = 0; t < pipeline.config().tasks.size(); ++t) {
    sens.push_back(task_sensitivity(pipeline, calib.images,
                                    static_cast<int>(t), cfg.train.combine));
    lambdas.push_back(pipeline.config().tasks[t].weight);
  }
  ImportanceVector s = combine_importance(sens, lambdas);
  const double peak =
      *std::max_element(s.values.begin(), s.values.end());
  if (peak == 0.0) {
    std::fprintf(stderr,
                 "warning: importance vector is all zero; top-B selection "
                 "degenerates to sequential\n");
  }
  return s;
}

}  // namespace

std::string run_dir(const ExperimentConfig& cfg, CodingMode mode,
                    std::uint64_t seed, const std::string& out_dir) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%08llx",
                static_cast<unsigned long long>(config_hash(cfg) & 0xffffffffull));
  return out_dir + "/" + mode_name(mode) + "-seed" + std::to_string(seed) +
         "-" + buf;
}

TrainedCell train_cell(const ExperimentConfig& cfg, CodingMode mode,
                       std::uint64_t seed, const std::string& dir) {
  const bool persist = !dir.empty();
  if (persist) {
    fs::create_directories(dir);
    write_resolved_config(cfg, dir);
  }

  TrainedCell cell;
  cell.mode = mode;
  cell.seed = seed;
  cell.data = cell_dataset(cfg, seed);

  const std::vector<TaskKind> tasks = cell_tasks(mode);
  for (std::size_t slot = 0; slot < tasks.size(); ++slot) {
    Pipeline pipeline = make_pipeline(cfg, mode, seed, slot);
    const TrainConfig tc = cell_train_config(cfg, mode, seed, slot);

    TrainStats s1 = train_stage1(pipeline, cell.data, tc, cfg.channel);
    if (persist) {
      save_checkpoint(ckpt_path(dir, mode, 1, slot), pipeline,
                      cell.data.cfg);
      append_epoch_logs(log_path(dir, mode, slot), s1.epochs);
    }

    ImportanceVector s = rank_pipeline(pipeline, cell.data, cfg);
    if (persist) save_importance(importance_path(dir, mode, slot), s);

    TrainStats s2 = train_stage2(pipeline, cell.data, tc, cfg.channel, s);
    if (persist) {
      save_checkpoint(ckpt_path(dir, mode, 2, slot), pipeline,
                      cell.data.cfg);
      append_epoch_logs(log_path(dir, mode, slot), s2.epochs);
    }

    cell.skipped_slots += s1.skipped_slots + s2.skipped_slots;
    cell.batch_reports.insert(cell.batch_reports.end(),
                              s1.batch_reports.begin(),
                              s1.batch_reports.end());
    cell.batch_reports.insert(cell.batch_reports.end(),
                              s2.batch_reports.begin(),
                              s2.batch_reports.end());
    cell.importance.push_back(std::move(s));
    cell.pipelines.push_back(std::move(pipeline));
  }
  return cell;
}

void cell_stage1(const ExperimentConfig& cfg, CodingMode mode,
                 std::uint64_t seed, const std::string& dir) {
  fs::create_directories(dir);
  write_resolved_config(cfg, dir);
  const Dataset data = cell_dataset(cfg, seed);
  const std::vector<TaskKind> tasks = cell_tasks(mode);
  for (std::size_t slot = 0; slot < tasks.size(); ++slot) {
    Pipeline pipeline = make_pipeline(cfg, mode, seed, slot);
    const TrainStats stats = train_stage1(
        pipeline, data, cell_train_config(cfg, mode, seed, slot), cfg.channel);
    save_checkpoint(ckpt_path(dir, mode, 1, slot), pipeline, data.cfg);
    append_epoch_logs(log_path(dir, mode, slot), stats.epochs);
  }
}

void cell_rank(const ExperimentConfig& cfg, CodingMode mode,
               std::uint64_t seed, const std::string& dir) {
  const Dataset data = cell_dataset(cfg, seed);
  const std::vector<TaskKind> tasks = cell_tasks(mode);
  for (std::size_t slot = 0; slot < tasks.size(); ++slot) {
    const Pipeline pipeline =
        restore_pipeline(load_checkpoint(ckpt_path(dir, mode, 1, slot)));
    save_importance(importance_path(dir, mode, slot),
                    rank_pipeline(pipeline, data, cfg));
  }
}

void cell_stage2(const ExperimentConfig& cfg, CodingMode mode,
                 std::uint64_t seed, const std::string& dir) {
  const Dataset data = cell_dataset(cfg, seed);
  const std::vector<TaskKind> tasks = cell_tasks(mode);
  for (std::size_t slot = 0; slot < tasks.size(); ++slot) {
    Pipeline pipeline =
        restore_pipeline(load_checkpoint(ckpt_path(dir, mode, 1, slot)));
    const ImportanceVector s =
        load_importance(importance_path(dir, mode, slot));
    const TrainStats stats =
        train_stage2(pipeline, data, cell_train_config(cfg, mode, seed, slot),
                     cfg.channel, s);
    save_checkpoint(ckpt_path(dir, mode, 2, slot), pipeline, data.cfg);
    append_epoch_logs(log_path(dir, mode, slot), stats.epochs);
  }
}

TrainedCell load_cell(const ExperimentConfig& cfg, CodingMode mode,
                      std::uint64_t seed, const std::string& dir) {
  TrainedCell cell;
  cell.mode = mode;
  cell.seed = seed;
  cell.data = cell_dataset(cfg, seed);
  const std::vector<TaskKind> tasks = cell_tasks(mode);
  for (std::size_t slot = 0; slot < tasks.size(); ++slot) {
    std::string path = ckpt_path(dir, mode, 2, slot);
    if (!fs::exists(path)) path = ckpt_path(dir, mode, 1, slot);
    cell.pipelines.push_back(restore_pipeline(load_checkpoint(path)));
    cell.importance.push_back(
        load_importance(importance_path(dir, mode, slot)));
  }
  return cell;
}

ResultRow evaluate_cell(const TrainedCell& cell, const ExperimentConfig& cfg,
                        double snr_db, SelectionPolicy method) {
  ResultRow row;
  row.seed = cell.seed;
  row.snr_db = snr_db;
  row.method = method;
  row.mode = cell.mode;

  const int L = cfg.latent_features;
  ChannelConfig ch = cfg.channel;
  ch.snr_db = snr_db;
  row.budget = feature_budget(ch, L);

  // Single-task coding splits the slot capacity across its parallel links.
  const int streams =
      cell.mode == CodingMode::kStc ? static_cast<int>(cell.pipelines.size())
                                    : 1;
  const int link_budget = stream_budget(ch, L, streams);

  // A zero budget cannot carry any features; the slot is reported as a task
  // failure unless the method ignores the budget entirely.
  if (link_budget == 0 && method != SelectionPolicy::kFull) return row;

  const Batch query = make_batch(cell.data.query);
  const Batch gallery = make_batch(cell.data.gallery);
  const std::size_t nq = query.images.rows();

  // One [query; gallery] stack per pipeline and realization.
  Tensor stacked({nq + gallery.images.rows(), query.images.cols()});
  std::copy(query.images.values().begin(), query.images.values().end(),
            stacked.values().begin());
  std::copy(gallery.images.values().begin(), gallery.images.values().end(),
            stacked.values().begin() + query.images.size());
  std::vector<int> all_colors = query.colors;
  all_colors.insert(all_colors.end(), gallery.colors.begin(),
                    gallery.colors.end());
  std::vector<int> all_types = query.types;
  all_types.insert(all_types.end(), gallery.types.begin(),
                   gallery.types.end());

  const double sigma2 = noise_sigma2(snr_db, ch.avg_power);
  const std::uint64_t snr_key =
      static_cast<std::uint64_t>(static_cast<std::int64_t>(snr_db * 1000.0));
  const int R = cfg.eval_realizations;

  std::vector<double> r1(R, 0.0), cacc(R, 0.0), tacc(R, 0.0);
  std::vector<int> fades(R, 0);

  const auto eval_one = [&](int r) {
    // Streams depend on (seed, snr, realization) only, never on the method,
    // so fir at B = L reproduces full exactly.
    const std::uint64_t slot_seed = mix64(cell.seed, kEvalSalt, snr_key,
                                          static_cast<std::uint64_t>(r));
    RngStream h_rng(slot_seed, 0x48);
    cplx h = sample_rician(ch.rician_factor, h_rng);
    while (std::abs(h) <= 1e-9) {
      ++fades[r];
      h = sample_rician(ch.rician_factor, h_rng);
    }

    for (std::size_t slot = 0; slot < cell.pipelines.size(); ++slot) {
      const Pipeline& pipeline = cell.pipelines[slot];
      SelectionPattern pattern;
      switch (method) {
        case SelectionPolicy::kFull:
          pattern = select_full(L);
          break;
        case SelectionPolicy::kFir:
          pattern = select_top_b(cell.importance[slot], link_budget);
          break;
        case SelectionPolicy::kSequential:
          pattern = select_sequential(L, link_budget);
          break;
        case SelectionPolicy::kRandom: {
          RngStream pat_rng(slot_seed, 0x9a, slot);
          pattern = select_random(L, link_budget, pat_rng);
          break;
        }
      }
      RngStream noise_rng(slot_seed, 0x15, slot);
      const Tensor noise = draw_noise(stacked.rows(), pattern.budget(),
                                      sigma2, noise_rng);

      Graph g;
      Pipeline::Bound bound = pipeline.bind(g);
      PathResult path = forward_path(bound, g.input(stacked), pattern,
                                     ch.avg_power, h, &noise);
      const Tensor& e_hat = g.value(path.e_hat);

      if (cell.mode == CodingMode::kMtc) {
        // Shared pipeline: slot 0 carries every metric.
        Tensor qf({nq, e_hat.cols()});
        Tensor gf({e_hat.rows() - nq, e_hat.cols()});
        std::copy(e_hat.values().begin(),
                  e_hat.values().begin() + qf.size(), qf.values().begin());
        std::copy(e_hat.values().begin() + qf.size(), e_hat.values().end(),
                  gf.values().begin());
        r1[r] = rank1_accuracy(qf, gf, query.identities, gallery.identities);
        cacc[r] =
            classification_accuracy(g.value(path.probs[1]), all_colors);
        tacc[r] = classification_accuracy(g.value(path.probs[2]), all_types);
      } else {
        switch (pipeline.config().tasks[0].kind) {
          case TaskKind::kReid: {
            Tensor qf({nq, e_hat.cols()});
            Tensor gf({e_hat.rows() - nq, e_hat.cols()});
            std::copy(e_hat.values().begin(),
                      e_hat.values().begin() + qf.size(), qf.values().begin());
            std::copy(e_hat.values().begin() + qf.size(), e_hat.values().end(),
                      gf.values().begin());
            r1[r] = rank1_accuracy(qf, gf, query.identities,
                                   gallery.identities);
            break;
          }
          case TaskKind::kColor:
            cacc[r] =
                classification_accuracy(g.value(path.probs[0]), all_colors);
            break;
          case TaskKind::kType:
            tacc[r] =
                classification_accuracy(g.value(path.probs[0]), all_types);
            break;
        }
      }
    }
  };

#pragma omp parallel for schedule(static)
  for (int r = 0; r < R; ++r) eval_one(r);

  for (int r = 0; r < R; ++r) {
    row.rank1 += r1[r] / R;
    row.color_acc += cacc[r] / R;
    row.type_acc += tacc[r] / R;
    row.deep_fades += fades[r];
  }
  return row;
}

void sort_rows(std::vector<ResultRow>& rows) {
  std::sort(rows.begin(), rows.end(),
            [](const ResultRow& a, const ResultRow& b) {
              if (a.seed != b.seed) return a.seed < b.seed;
              const int m = std::string(mode_name(a.mode))
                                .compare(mode_name(b.mode));
              if (m != 0) return m < 0;
              const int p = std::string(policy_name(a.method))
                                .compare(policy_name(b.method));
              if (p != 0) return p < 0;
              return a.snr_db < b.snr_db;
            });
}

SweepOutcome run_sweep(const ExperimentConfig& cfg,
                       const std::string& out_dir) {
  cfg.validate();
  fs::create_directories(out_dir);
  write_resolved_config(cfg, out_dir);

  struct CellJob {
    CodingMode mode;
    std::uint64_t seed;
  };
  std::vector<CellJob> jobs;
  for (const CodingMode mode : cfg.modes) {
    for (int k = 0; k < cfg.num_seeds; ++k) {
      jobs.push_back({mode, cfg.base_seed + static_cast<std::uint64_t>(k)});
    }
  }

  if (cfg.workers > 0) omp_set_num_threads(cfg.workers);

  std::vector<std::vector<ResultRow>> cell_rows(jobs.size());
  std::vector<std::string> failures(jobs.size());
  std::vector<double> cell_seconds(jobs.size(), 0.0);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const std::string dir =
          run_dir(cfg, jobs[j].mode, jobs[j].seed, out_dir);
      const TrainedCell cell =
          train_cell(cfg, jobs[j].mode, jobs[j].seed, dir);
      for (const double snr : cfg.snr_grid_db) {
        for (const SelectionPolicy method : cfg.methods) {
          cell_rows[j].push_back(evaluate_cell(cell, cfg, snr, method));
        }
      }
    } catch (const std::exception& e) {
      failures[j] = std::string(mode_name(jobs[j].mode)) + " seed " +
                    std::to_string(jobs[j].seed) + " failed: " + e.what();
    }
    cell_seconds[j] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
  }

  SweepOutcome out;
  out.cell_seconds = cell_seconds;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (!failures[j].empty()) {
      out.failures.push_back(failures[j]);
      continue;
    }
    out.rows.insert(out.rows.end(), cell_rows[j].begin(), cell_rows[j].end());
  }
  sort_rows(out.rows);

  if (!out.failures.empty()) {
    std::ofstream os(out_dir + "/failures.log");
    for (const std::string& f : out.failures) os << f << "\n";
  }
  return out;
}

std::string format_csv(const std::vector<ResultRow>& rows) {
  std::string out =
      "seed,snr_db,method,mode,budget,rank1,color_acc,type_acc,deep_fades\n";
  char buf[256];
  for (const ResultRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%llu,%.4f,%s,%s,%d,%.4f,%.4f,%.4f,%d\n",
                  static_cast<unsigned long long>(r.seed), r.snr_db,
                  policy_name(r.method), mode_name(r.mode), r.budget, r.rank1,
                  r.color_acc, r.type_acc, r.deep_fades);
    out += buf;
  }
  return out;
}

void emit_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  if (rows.empty()) throw ContractError("emit_csv: no rows to write");
  std::ofstream os(path);
  if (!os) throw IoError("cannot write CSV '" + path + "'");
  os << format_csv(rows);
  if (!os) throw IoError("short write on CSV '" + path + "'");
}

void emit_plot_series(const std::vector<ResultRow>& rows,
                      const std::string& dir) {
  if (rows.empty()) throw ContractError("emit_plot_series: no rows");
  fs::create_directories(dir);

  struct Key {
    std::string mode, method;
    double snr;
    bool operator<(const Key& o) const {
      if (mode != o.mode) return mode < o.mode;
      if (method != o.method) return method < o.method;
      return snr < o.snr;
    }
  };
  const char* metric_names[3] = {"rank1", "color_acc", "type_acc"};
  for (int metric = 0; metric < 3; ++metric) {
    std::map<Key, std::vector<double>> groups;
    for (const ResultRow& r : rows) {
      const double v = metric == 0   ? r.rank1
                       : metric == 1 ? r.color_acc
                                     : r.type_acc;
      groups[{mode_name(r.mode), policy_name(r.method), r.snr_db}].push_back(v);
    }
    std::map<std::string, std::string> per_mode;
    for (const auto& [key, vals] : groups) {
      double mean = 0.0;
      for (double v : vals) mean += v / vals.size();
      double var = 0.0;
      for (double v : vals) var += (v - mean) * (v - mean);
      const double stderr_ =
          vals.size() > 1
              ? std::sqrt(var / (vals.size() - 1)) / std::sqrt(vals.size())
              : 0.0;
      char buf[160];
      std::snprintf(buf, sizeof buf, "%.4f,%s,%.6f,%.6f\n", key.snr,
                    key.method.c_str(), mean, stderr_);
      per_mode[key.mode] += buf;
    }
    for (const auto& [mode, body] : per_mode) {
      const std::string path =
          dir + "/series_" + mode + "_" + metric_names[metric] + ".csv";
      std::ofstream os(path);
      if (!os) throw IoError("cannot write series file '" + path + "'");
      os << "snr_db,method,mean,stderr\n" << body;
    }
  }
}

}  // namespace semlink
