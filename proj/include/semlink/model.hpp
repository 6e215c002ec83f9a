#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semlink/autodiff.hpp"
#include "semlink/optimizer.hpp"
#include "semlink/tensor.hpp"

namespace semlink {

enum class TaskKind { kReid, kColor, kType };

const char* task_name(TaskKind k);

struct TaskSpec {
  TaskKind kind = TaskKind::kReid;
  int classes = 2;
  double weight = 1.0;

  void validate() const;
};

struct ModelConfig {
  int input_dim = 256;      // flattened W*H
  int feature_dim = 64;     // N, width of e
  int latent_complex = 32;  // L, complex features in f
  int encoder_hidden = 96;
  int codec_hidden = 64;
  int head_hidden = 32;
  std::vector<TaskSpec> tasks;

  void validate() const;
};

// The toy transmit/receive network: a semantic encoder (image -> e), a
// joint source-channel encoder (e -> 2L reals read as C^L), the mirrored
// decoder, and one classifier head per task. All stages are 2-layer MLPs.
class Pipeline {
 public:
  Pipeline(ModelConfig cfg, std::uint64_t init_seed);

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // Graph-bound view of the parameters; all forward passes for one step go
  // through one Bound so every parameter appears as a single leaf.
  struct Bound {
    Graph* g = nullptr;
    const ModelConfig* cfg = nullptr;
    std::vector<Var> leaves;  // aligned with ParamStore entry order

    Var semantic_encode(Var x) const;
    Var jsc_encode(Var e) const;
    Var jsc_decode(Var z_eq) const;
    std::vector<Var> task_heads(Var e_hat) const;
  };

  Bound bind(Graph& g) const;

  // Leaf gradients in ParamStore entry order (zero when unreached).
  std::vector<Tensor> collect_grads(const Graph& g, const Bound& b) const;

 private:
  ModelConfig cfg_;
  ParamStore params_;
};

// Fraction of queries whose Euclidean-nearest gallery row shares the query
// identity; distance ties resolved toward the lowest gallery index.
double rank1_accuracy(const Tensor& query_feats, const Tensor& gallery_feats,
                      const std::vector<int>& query_ids,
                      const std::vector<int>& gallery_ids);

// Fraction of rows whose argmax (lowest index on ties) equals the label.
double classification_accuracy(const Tensor& probs,
                               const std::vector<int>& labels);

}  // namespace semlink
