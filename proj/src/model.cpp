#include "semlink/model.hpp"

#include <cmath>
#include <limits>

#include "semlink/errors.hpp"
#include "semlink/kernels.hpp"
#include "semlink/rng.hpp"

namespace semlink {

const char* task_name(TaskKind k) {
  switch (k) {
    case TaskKind::kReid: return "reid";
    case TaskKind::kColor: return "color";
    case TaskKind::kType: return "type";
  }
  return "?";
}

void TaskSpec::validate() const {
  if (classes < 2) throw ConfigError("task: class count must be >= 2");
  if (weight < 0.0) throw ConfigError("task: weight must be >= 0");
}

void ModelConfig::validate() const {
  if (input_dim < 1) throw ConfigError("model: input_dim must be >= 1");
  if (feature_dim < 1) throw ConfigError("model: feature_dim must be >= 1");
  if (latent_complex < 1) {
    throw ConfigError("model: latent_complex must be >= 1");
  }
  if (encoder_hidden < 1 || codec_hidden < 1 || head_hidden < 1) {
    throw ConfigError("model: hidden sizes must be >= 1");
  }
  if (tasks.empty()) throw ConfigError("model: at least one task required");
  for (const TaskSpec& t : tasks) t.validate();
}

namespace {

Tensor he_init(std::size_t fan_in, std::size_t fan_out, RngStream& rng) {
  Tensor w({fan_in, fan_out});
  const double std = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (double& v : w.values()) v = std * rng.normal();
  return w;
}

void add_mlp(ParamStore& ps, const std::string& prefix, std::size_t in,
             std::size_t hidden, std::size_t out, RngStream& rng) {
  ps.add(prefix + ".w1", he_init(in, hidden, rng));
  ps.add(prefix + ".b1", Tensor({1, hidden}));
  ps.add(prefix + ".w2", he_init(hidden, out, rng));
  ps.add(prefix + ".b2", Tensor({1, out}));
}

// Leaf offsets are fixed by construction order: encoder, jsc encoder,
// jsc decoder, then 4 leaves per head.
constexpr std::size_t kBlockLeaves = 4;

Var mlp_forward(Graph& g, const std::vector<Var>& leaves, std::size_t base,
                Var x) {
  Var h = g.add_rowwise(g.matmul(x, leaves[base]), leaves[base + 1]);
  h = g.relu(h);
  return g.add_rowwise(g.matmul(h, leaves[base + 2]), leaves[base + 3]);
}

}  // namespace

Pipeline::Pipeline(ModelConfig cfg, std::uint64_t init_seed)
    : cfg_(std::move(cfg)) {
  cfg_.validate();
  RngStream rng(init_seed, 0x9a);
  const std::size_t n = static_cast<std::size_t>(cfg_.feature_dim);
  const std::size_t two_l = 2 * static_cast<std::size_t>(cfg_.latent_complex);
  add_mlp(params_, "enc", cfg_.input_dim, cfg_.encoder_hidden, n, rng);
  add_mlp(params_, "jsce", n, cfg_.codec_hidden, two_l, rng);
  add_mlp(params_, "jscd", two_l, cfg_.codec_hidden, n, rng);
  for (std::size_t i = 0; i < cfg_.tasks.size(); ++i) {
    add_mlp(params_, "head" + std::to_string(i) + "." +
                         task_name(cfg_.tasks[i].kind),
            n, cfg_.head_hidden, cfg_.tasks[i].classes, rng);
  }
}

Pipeline::Bound Pipeline::bind(Graph& g) const {
  Bound b;
  b.g = &g;
  b.cfg = &cfg_;
  b.leaves.reserve(params_.count());
  for (std::size_t i = 0; i < params_.count(); ++i) {
    b.leaves.push_back(g.input(params_.entry(i).value));
  }
  return b;
}

Var Pipeline::Bound::semantic_encode(Var x) const {
  if (g->value(x).cols() != static_cast<std::size_t>(cfg->input_dim)) {
    throw ShapeError("semantic_encode: input width " +
                     g->value(x).shape_str() + " != input_dim " +
                     std::to_string(cfg->input_dim));
  }
  return mlp_forward(*g, leaves, 0, x);
}

Var Pipeline::Bound::jsc_encode(Var e) const {
  if (g->value(e).cols() != static_cast<std::size_t>(cfg->feature_dim)) {
    throw ShapeError("jsc_encode: input width " + g->value(e).shape_str() +
                     " != feature_dim " + std::to_string(cfg->feature_dim));
  }
  return mlp_forward(*g, leaves, kBlockLeaves, e);
}

Var Pipeline::Bound::jsc_decode(Var z_eq) const {
  if (g->value(z_eq).cols() !=
      2 * static_cast<std::size_t>(cfg->latent_complex)) {
    throw ShapeError("jsc_decode: input width " + g->value(z_eq).shape_str() +
                     " != 2L = " + std::to_string(2 * cfg->latent_complex));
  }
  return mlp_forward(*g, leaves, 2 * kBlockLeaves, z_eq);
}

std::vector<Var> Pipeline::Bound::task_heads(Var e_hat) const {
  std::vector<Var> probs;
  probs.reserve(cfg->tasks.size());
  for (std::size_t i = 0; i < cfg->tasks.size(); ++i) {
    const std::size_t base = (3 + i) * kBlockLeaves;
    probs.push_back(g->softmax(mlp_forward(*g, leaves, base, e_hat)));
  }
  return probs;
}

std::vector<Tensor> Pipeline::collect_grads(const Graph& g,
                                            const Bound& b) const {
  std::vector<Tensor> grads;
  grads.reserve(params_.count());
  for (std::size_t i = 0; i < params_.count(); ++i) {
    if (g.has_grad(b.leaves[i])) {
      grads.push_back(g.grad(b.leaves[i]));
    } else {
      grads.push_back(Tensor(params_.entry(i).value.shape()));
    }
  }
  return grads;
}

double rank1_accuracy(const Tensor& query_feats, const Tensor& gallery_feats,
                      const std::vector<int>& query_ids,
                      const std::vector<int>& gallery_ids) {
  if (query_feats.rows() == 0 || query_ids.empty()) {
    throw ContractError("rank1_accuracy: empty query set");
  }
  if (gallery_feats.rows() == 0) {
    throw ContractError("rank1_accuracy: empty gallery");
  }
  if (query_feats.cols() != gallery_feats.cols()) {
    throw ShapeError("rank1_accuracy: feature widths differ, " +
                     query_feats.shape_str() + " vs " +
                     gallery_feats.shape_str());
  }
  if (query_ids.size() != query_feats.rows() ||
      gallery_ids.size() != gallery_feats.rows()) {
    throw ContractError("rank1_accuracy: label counts do not match features");
  }
  const std::size_t nq = query_feats.rows();
  const std::size_t ng = gallery_feats.rows();
  const std::size_t d = query_feats.cols();
  std::vector<int> hit(nq, 0);
#pragma omp parallel for schedule(static) if (nq > 1)
  for (std::size_t q = 0; q < nq; ++q) {
    const double* qf = query_feats.data() + q * d;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_g = 0;
    for (std::size_t gi = 0; gi < ng; ++gi) {
      const double* gf = gallery_feats.data() + gi * d;
      double sq = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = qf[j] - gf[j];
        sq += diff * diff;
      }
      if (sq < best) {  // strict: ties keep the lowest gallery index
        best = sq;
        best_g = gi;
      }
    }
    hit[q] = gallery_ids[best_g] == query_ids[q] ? 1 : 0;
  }
  std::size_t correct = 0;
  for (int h : hit) correct += h;
  return static_cast<double>(correct) / static_cast<double>(nq);
}

double classification_accuracy(const Tensor& probs,
                               const std::vector<int>& labels) {
  if (labels.size() != probs.rows()) {
    throw ShapeError("classification_accuracy: " +
                     std::to_string(labels.size()) + " labels for " +
                     probs.shape_str());
  }
  if (probs.rows() == 0) return 0.0;
  const std::size_t c = probs.cols();
  std::size_t correct = 0;
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    const double* row = probs.data() + r * c;
    std::size_t arg = 0;
    for (std::size_t j = 1; j < c; ++j) {
      if (row[j] > row[arg]) arg = j;  // ties keep the lowest index
    }
    if (static_cast<int>(arg) == labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(probs.rows());
}

}  // namespace semlink
