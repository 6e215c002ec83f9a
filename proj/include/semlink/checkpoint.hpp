#pragma once

#include <string>
#include <utility>
#include <vector>

#include "semlink/dataset.hpp"
#include "semlink/model.hpp"
#include "semlink/selection.hpp"

namespace semlink {

// Versioned binary container: dataset config, model config and the named
// flat parameter arrays. Round trips are bit-exact.
struct Checkpoint {
  DatasetConfig dataset;
  ModelConfig model;
  std::vector<std::pair<std::string, Tensor>> params;
};

void save_checkpoint(const std::string& path, const Pipeline& pipeline,
                     const DatasetConfig& dataset);
Checkpoint load_checkpoint(const std::string& path);

// Rebuilds a pipeline from a checkpoint (names and shapes must match the
// model config exactly).
Pipeline restore_pipeline(const Checkpoint& ckpt);

// Importance vector as a plain-text array: a header with L and the task
// weights, then one value per line at full precision.
void save_importance(const std::string& path, const ImportanceVector& s);
ImportanceVector load_importance(const std::string& path);

}  // namespace semlink
