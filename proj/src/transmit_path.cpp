#include "semlink/transmit_path.hpp"

#include <cmath>

#include "semlink/errors.hpp"

namespace semlink {

PathResult forward_path(const Pipeline::Bound& bound, Var x,
                        const SelectionPattern& pattern, double avg_power,
                        cplx h, const Tensor* noise) {
  if (pattern.indices.empty()) {
    throw ContractError("forward_path: empty selection pattern (budget 0 "
                        "slots cannot transmit)");
  }
  Graph& g = *bound.g;
  PathResult r;
  r.x = x;
  r.e = bound.semantic_encode(x);
  r.f = bound.jsc_encode(r.e);

  const std::vector<std::size_t> cols = pattern.real_columns();
  r.z_tilde = g.gather_cols(r.f, cols);
  const double target_power =
      avg_power * static_cast<double>(pattern.budget());
  r.z = g.row_power_normalize(r.z_tilde, target_power);

  Var received = g.complex_scale(r.z, h);
  if (noise != nullptr) {
    if (!noise->same_shape(g.value(r.z))) {
      throw ShapeError("forward_path: noise " + noise->shape_str() +
                       " does not match signal " + g.value(r.z).shape_str());
    }
    received = g.add(received, g.input(*noise));
  }
  Var equalized = g.complex_scale(received, 1.0 / h);

  const std::size_t full_width =
      2 * static_cast<std::size_t>(bound.cfg->latent_complex);
  Var assembled = g.scatter_cols(equalized, cols, full_width);
  r.e_hat = bound.jsc_decode(assembled);
  r.probs = bound.task_heads(r.e_hat);
  return r;
}

Tensor draw_noise(std::size_t batch, int budget, double sigma2,
                  RngStream& rng) {
  Tensor t({batch, 2 * static_cast<std::size_t>(budget)});
  const double comp_std = std::sqrt(sigma2 / 2.0);
  for (double& v : t.values()) v = rng.normal(0.0, comp_std);
  return t;
}

SensitivityVector task_sensitivity(const Pipeline& pipeline,
                                   const Tensor& calibration_images,
                                   int task_index,
                                   SensitivityCombine combine) {
  if (calibration_images.rows() == 0) {
    throw ContractError("task_sensitivity: empty calibration batch");
  }
  if (task_index < 0 ||
      task_index >= static_cast<int>(pipeline.config().tasks.size())) {
    throw ContractError("task_sensitivity: task index out of range");
  }
  const int L = pipeline.config().latent_complex;

  // The attribution chain is classifier(decoder(f)) over an ideal lossless
  // link: the probability gradient reflects the receiver's use of each
  // feature, not the transmit power constraint.
  Graph g;
  Pipeline::Bound bound = pipeline.bind(g);
  Var x = g.input(calibration_images);
  Var e = bound.semantic_encode(x);
  Var f = bound.jsc_encode(e);
  Var e_hat = bound.jsc_decode(f);
  const std::vector<Var> all_probs = bound.task_heads(e_hat);
  const Tensor& probs = g.value(all_probs[task_index]);
  if (const auto bad = g.first_nonfinite()) {
    throw ContractError("task_sensitivity: model produced non-finite values "
                        "at " + *bad + "; train before ranking");
  }

  // Differentiate each sample's own predicted-class probability: rows pass
  // through the pipeline independently, so one backward of the batch sum
  // yields every per-sample gradient.
  const std::size_t rows = probs.rows();
  const std::size_t c = probs.cols();
  std::vector<std::size_t> predicted(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t arg = 0;
    for (std::size_t j = 1; j < c; ++j) {
      if (probs[r * c + j] > probs[r * c + arg]) arg = j;
    }
    predicted[r] = arg;
  }
  Var root = g.sum(g.pick_per_row(all_probs[task_index], predicted));
  g.backward(root);

  SensitivityVector s;
  s.task_id = task_index;
  s.values.assign(L, 0.0);
  if (!g.has_grad(f)) return s;  // constant head: zero sensitivity

  const Tensor& fg = g.grad(f);
  const double inv_rows = 1.0 / static_cast<double>(rows);
  if (combine == SensitivityCombine::kMagnitude) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (int j = 0; j < L; ++j) {
        const double re = fg[r * 2 * L + 2 * j];
        const double im = fg[r * 2 * L + 2 * j + 1];
        s.values[j] += std::hypot(re, im) * inv_rows;
      }
    }
  } else {
    // Literal signed average; cancellation across samples is possible.
    std::vector<double> mean_re(L, 0.0), mean_im(L, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      for (int j = 0; j < L; ++j) {
        mean_re[j] += fg[r * 2 * L + 2 * j] * inv_rows;
        mean_im[j] += fg[r * 2 * L + 2 * j + 1] * inv_rows;
      }
    }
    for (int j = 0; j < L; ++j) {
      s.values[j] = std::hypot(mean_re[j], mean_im[j]);
    }
  }
  return s;
}

}  // namespace semlink
