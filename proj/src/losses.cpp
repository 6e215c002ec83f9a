#include "semlink/losses.hpp"

#include <string>

#include "semlink/errors.hpp"

namespace semlink {

namespace {
constexpr double kProbEps = 1e-7;
}

Var cross_entropy(Graph& g, Var probs, const std::vector<int>& labels,
                  int num_classes, CrossEntropyVariant variant) {
  const Tensor& p = g.value(probs);
  if (p.rank() != 2 || p.cols() != static_cast<std::size_t>(num_classes) ||
      labels.size() != p.rows()) {
    throw ShapeError("cross_entropy: probs " + p.shape_str() + " vs " +
                     std::to_string(labels.size()) + " labels of " +
                     std::to_string(num_classes) + " classes");
  }
  std::vector<std::size_t> picks(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw ContractError("cross_entropy: label " + std::to_string(labels[i]) +
                          " out of range [0, " + std::to_string(num_classes) +
                          ")");
    }
    picks[i] = static_cast<std::size_t>(labels[i]);
  }
  Var clamped = g.clamp(probs, kProbEps, 1.0 - kProbEps);
  Var log_p = g.log(clamped);
  if (variant == CrossEntropyVariant::kCategorical) {
    return g.affine(g.mean(g.pick_per_row(log_p, picks)), -1.0, 0.0);
  }
  // One-hot binary form: the off-label sum over log(1-p) collapses to
  // sum_rows(log(1-p)) minus the label column.
  Var log_1mp = g.log(g.affine(clamped, -1.0, 1.0));
  Var per_row = g.add(g.pick_per_row(log_p, picks),
                      g.sub(g.sum_rows(log_1mp), g.pick_per_row(log_1mp, picks)));
  return g.affine(g.mean(per_row), -1.0, 0.0);
}

Var channel_loss(Graph& g, Var e, Var e_hat) {
  require_same_shape(g.value(e), g.value(e_hat), "channel_loss");
  Var diff = g.sub(e, e_hat);
  return g.mean(g.mul(diff, diff));
}

LossVars compose_losses(Graph& g, const std::vector<TaskSpec>& tasks,
                        const std::vector<Var>& probs, const Batch& labels,
                        Var e, Var e_hat, const LossSettings& settings) {
  if (probs.size() != tasks.size()) {
    throw ContractError("compose_losses: one probability tensor per task");
  }
  LossVars out;
  Var weighted_sum;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const TaskSpec& t = tasks[i];
    Var term;
    switch (t.kind) {
      case TaskKind::kReid: {
        Var triplet =
            g.hard_triplet(e_hat, labels.identities, settings.triplet_margin);
        Var ce = cross_entropy(g, probs[i], labels.identities, t.classes,
                               settings.ce);
        term = g.add(triplet, ce);
        out.reid = term;
        break;
      }
      case TaskKind::kColor:
        term = cross_entropy(g, probs[i], labels.colors, t.classes,
                             settings.ce);
        out.color = term;
        break;
      case TaskKind::kType:
        term = cross_entropy(g, probs[i], labels.types, t.classes,
                             settings.ce);
        out.type = term;
        break;
    }
    Var weighted = g.affine(term, t.weight, 0.0);
    weighted_sum = weighted_sum.valid() ? g.add(weighted_sum, weighted)
                                        : weighted;
  }
  out.task = weighted_sum;
  out.channel = channel_loss(g, e, e_hat);
  out.e2e = g.add(out.task, out.channel);
  return out;
}

LossReport report_losses(const Graph& g, const LossVars& vars,
                         const std::vector<TaskSpec>& tasks) {
  LossReport r;
  r.e2e = g.value(vars.e2e)[0];
  r.task = g.value(vars.task)[0];
  r.channel = g.value(vars.channel)[0];
  if (vars.reid.valid()) r.reid = g.value(vars.reid)[0];
  if (vars.color.valid()) r.color = g.value(vars.color)[0];
  if (vars.type.valid()) r.type = g.value(vars.type)[0];
  for (const TaskSpec& t : tasks) {
    switch (t.kind) {
      case TaskKind::kReid: r.lambdas[0] = t.weight; break;
      case TaskKind::kColor: r.lambdas[1] = t.weight; break;
      case TaskKind::kType: r.lambdas[2] = t.weight; break;
    }
  }
  return r;
}

}  // namespace semlink
