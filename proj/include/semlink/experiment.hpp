#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semlink/checkpoint.hpp"
#include "semlink/config.hpp"
#include "semlink/trainer.hpp"

namespace semlink {

struct ResultRow {
  std::uint64_t seed = 0;
  double snr_db = 0.0;
  SelectionPolicy method = SelectionPolicy::kFull;
  CodingMode mode = CodingMode::kMtc;
  int budget = 0;
  double rank1 = 0.0;
  double color_acc = 0.0;
  double type_acc = 0.0;
  int deep_fades = 0;
};

// One trained (seed, mode) sweep cell. STC holds three parallel pipelines
// (reid, color, type); MTC a single shared one.
struct TrainedCell {
  CodingMode mode = CodingMode::kMtc;
  std::uint64_t seed = 0;
  Dataset data;
  std::vector<Pipeline> pipelines;
  std::vector<ImportanceVector> importance;
  std::vector<LossReport> batch_reports;  // both stages, all pipelines
  int skipped_slots = 0;
};

// Run directory for one (config, mode, seed): <out>/<mode>-seed<N>-<hash8>.
std::string run_dir(const ExperimentConfig& cfg, CodingMode mode,
                    std::uint64_t seed, const std::string& out_dir);

// Stage 1 + ranking + stage 2 in memory; when dir is non-empty the resolved
// config, checkpoints, importance vectors and epoch logs are persisted there.
TrainedCell train_cell(const ExperimentConfig& cfg, CodingMode mode,
                       std::uint64_t seed, const std::string& dir = "");

// Separate phases backing the train / rank / retrain CLI verbs.
void cell_stage1(const ExperimentConfig& cfg, CodingMode mode,
                 std::uint64_t seed, const std::string& dir);
void cell_rank(const ExperimentConfig& cfg, CodingMode mode,
               std::uint64_t seed, const std::string& dir);
void cell_stage2(const ExperimentConfig& cfg, CodingMode mode,
                 std::uint64_t seed, const std::string& dir);
TrainedCell load_cell(const ExperimentConfig& cfg, CodingMode mode,
                      std::uint64_t seed, const std::string& dir);

// Metrics at one (snr, method), averaged over eval_realizations independent
// channel realizations. Realization streams depend only on (seed, snr), so
// methods are compared on identical channels.
ResultRow evaluate_cell(const TrainedCell& cell, const ExperimentConfig& cfg,
                        double snr_db, SelectionPolicy method);

struct SweepOutcome {
  std::vector<ResultRow> rows;
  std::vector<std::string> failures;  // one line per failed cell
  std::vector<double> cell_seconds;   // train + evaluate wall time per cell
};

// Full experiment: trains every (seed, mode) cell, evaluates the SNR grid
// for every method, and returns rows sorted by (seed, mode, method, snr).
// Cells run in parallel up to cfg.workers.
SweepOutcome run_sweep(const ExperimentConfig& cfg,
                       const std::string& out_dir);

void emit_csv(const std::vector<ResultRow>& rows, const std::string& path);
std::string format_csv(const std::vector<ResultRow>& rows);

// Per-mode, per-metric series files (snr, method, mean over seeds, standard
// error) for plotting.
void emit_plot_series(const std::vector<ResultRow>& rows,
                      const std::string& dir);

void sort_rows(std::vector<ResultRow>& rows);

}  // namespace semlink
