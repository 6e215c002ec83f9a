#pragma once

#include <array>
#include <vector>

#include "semlink/autodiff.hpp"
#include "semlink/dataset.hpp"
#include "semlink/model.hpp"

namespace semlink {

enum class CrossEntropyVariant { kBinary, kCategorical };

// Mean over the batch of the negated one-hot binary cross entropy (or the
// plain categorical form); probabilities are clamped to [1e-7, 1 - 1e-7].
Var cross_entropy(Graph& g, Var probs, const std::vector<int>& labels,
                  int num_classes,
                  CrossEntropyVariant variant = CrossEntropyVariant::kBinary);

// MSE between the encoder output and its reconstruction, averaged over both
// the batch and the feature positions.
Var channel_loss(Graph& g, Var e, Var e_hat);

// Graph handles for one batch's loss terms; absent tasks stay invalid.
struct LossVars {
  Var e2e, task, channel;
  Var reid, color, type;
};

// Scalar snapshot of one batch: e2e = task + channel and
// task = lr*reid + lc*color + lt*type hold by construction.
struct LossReport {
  double e2e = 0.0, task = 0.0, channel = 0.0;
  double reid = 0.0, color = 0.0, type = 0.0;
  std::array<double, 3> lambdas{0.0, 0.0, 0.0};
};

struct LossSettings {
  double triplet_margin = 0.3;
  CrossEntropyVariant ce = CrossEntropyVariant::kBinary;
};

// Builds the weighted multi-task loss for one forward pass. The reid task
// combines the batch-hard triplet loss on e_hat with identity cross entropy.
LossVars compose_losses(Graph& g, const std::vector<TaskSpec>& tasks,
                        const std::vector<Var>& probs, const Batch& labels,
                        Var e, Var e_hat, const LossSettings& settings);

LossReport report_losses(const Graph& g, const LossVars& vars,
                         const std::vector<TaskSpec>& tasks);

}  // namespace semlink
