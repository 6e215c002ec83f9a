#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "semlink/rng.hpp"

namespace semlink {

using cplx = std::complex<double>;

struct ChannelConfig {
  double snr_db = 0.0;
  double rician_factor = 2.0;
  double avg_power = 1.0;        // P
  double slot_duration = 1.0;    // T, seconds
  double bandwidth = 6400.0;     // Wb, hertz
  int bits_per_feature = 64;

  void validate() const;
};

// One transmission slot: a block-fading coefficient and the noise drawn for
// the transmitted vector.
struct ChannelRealization {
  cplx h;
  std::vector<cplx> noise;
  std::uint64_t seed = 0;
};

// Total complex noise variance for a target SNR at average power P.
double noise_sigma2(double snr_db, double avg_power);

// h ~ CN(sqrt(r/(r+1)), 1/(r+1)).
cplx sample_rician(double rician_factor, RngStream& rng);

// Rescale to total power P*B, preserving direction.
std::vector<cplx> power_normalize(const std::vector<cplx>& z_tilde, double P);

// zhat_i = h * z_i + n_i.
std::vector<cplx> transmit(const std::vector<cplx>& z,
                           const ChannelRealization& realization);

// Zero-forcing with perfect CSI; |h| <= 1e-9 raises DeepFadeError.
std::vector<cplx> equalize(const std::vector<cplx>& z_hat, cplx h);

// Number of complex features that fit in one slot:
// floor(T*Wb*log2(1+snr) / bits_per_feature), clamped to L.
int feature_budget(const ChannelConfig& cfg, int num_features);
int feature_budget_linear(double time_bandwidth, double snr_linear,
                          int bits_per_feature, int num_features);

// The raw per-slot feature count before clamping to a vector length.
int feature_budget_unclamped(const ChannelConfig& cfg);

// Single-task coding runs `streams` parallel links through the same slot,
// so each link gets an equal share of the raw capacity (then clamps to L).
int stream_budget(const ChannelConfig& cfg, int num_features, int streams);

// Draws h (resampling on deep fades) and a length-B noise vector.
ChannelRealization make_realization(const ChannelConfig& cfg, int length,
                                    std::uint64_t seed,
                                    int* deep_fade_count = nullptr);

}  // namespace semlink
