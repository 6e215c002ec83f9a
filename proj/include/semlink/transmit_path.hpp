#pragma once

#include <complex>
#include <vector>

#include "semlink/autodiff.hpp"
#include "semlink/channel.hpp"
#include "semlink/model.hpp"
#include "semlink/selection.hpp"

namespace semlink {

// One end-to-end pass: encode, select, power-normalize, fade, add noise,
// equalize, scatter back to full width, decode, classify.
struct PathResult {
  Var x, e, f, z_tilde, z, e_hat;
  std::vector<Var> probs;
};

// noise is [batch x 2B] interleaved re/im, or nullptr for a noiseless pass.
// h is held constant for the slot; gradients flow through the signal only.
PathResult forward_path(const Pipeline::Bound& bound, Var x,
                        const SelectionPattern& pattern, double avg_power,
                        cplx h, const Tensor* noise);

// Draws iid CN(0, sigma2) entries for a [batch x 2B] noise tensor.
Tensor draw_noise(std::size_t batch, int budget, double sigma2,
                  RngStream& rng);

enum class SensitivityCombine { kMagnitude, kSigned };

// Gradient of each sample's predicted-class probability with respect to f,
// folded to one magnitude per complex feature and averaged over the batch.
// The chain runs classifier(decoder(f)) over an ideal lossless link, so the
// result depends only on the model and the batch.
SensitivityVector task_sensitivity(
    const Pipeline& pipeline, const Tensor& calibration_images,
    int task_index,
    SensitivityCombine combine = SensitivityCombine::kMagnitude);

}  // namespace semlink
