#include "semlink/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "semlink/errors.hpp"

namespace semlink {

namespace {
constexpr double kDeepFadeThreshold = 1e-9;
}

void ChannelConfig::validate() const {
  if (avg_power <= 0.0) throw ConfigError("channel: avg_power must be > 0");
  if (rician_factor < 0.0) {
    throw ConfigError("channel: rician_factor must be >= 0");
  }
  if (slot_duration <= 0.0) {
    throw ConfigError("channel: slot_duration must be > 0");
  }
  if (bandwidth <= 0.0) throw ConfigError("channel: bandwidth must be > 0");
  if (bits_per_feature < 1) {
    throw ConfigError("channel: bits_per_feature must be >= 1");
  }
}

double noise_sigma2(double snr_db, double avg_power) {
  if (avg_power <= 0.0) {
    throw ContractError("noise_sigma2: avg_power must be > 0");
  }
  return avg_power / std::pow(10.0, snr_db / 10.0);
}

cplx sample_rician(double rician_factor, RngStream& rng) {
  if (rician_factor < 0.0) {
    throw ContractError("sample_rician: rician factor must be >= 0");
  }
  const double los = std::sqrt(rician_factor / (rician_factor + 1.0));
  return los + rng.complex_normal(1.0 / (rician_factor + 1.0));
}

std::vector<cplx> power_normalize(const std::vector<cplx>& z_tilde, double P) {
  if (z_tilde.empty()) {
    throw ContractError("power_normalize: empty vector");
  }
  double sq = 0.0;
  for (const cplx& v : z_tilde) sq += std::norm(v);
  if (sq == 0.0) {
    throw DegenerateInputError("power_normalize: zero vector");
  }
  const double scale =
      std::sqrt(P * static_cast<double>(z_tilde.size())) / std::sqrt(sq);
  std::vector<cplx> out(z_tilde.size());
  for (std::size_t i = 0; i < z_tilde.size(); ++i) out[i] = scale * z_tilde[i];
  return out;
}

std::vector<cplx> transmit(const std::vector<cplx>& z,
                           const ChannelRealization& realization) {
  if (z.size() != realization.noise.size()) {
    throw ContractError("transmit: signal length " + std::to_string(z.size()) +
                        " vs noise length " +
                        std::to_string(realization.noise.size()));
  }
  std::vector<cplx> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = realization.h * z[i] + realization.noise[i];
  }
  return out;
}

std::vector<cplx> equalize(const std::vector<cplx>& z_hat, cplx h) {
  if (std::abs(h) <= kDeepFadeThreshold) {
    throw DeepFadeError("equalize: |h| <= 1e-9, slot lost");
  }
  std::vector<cplx> out(z_hat.size());
  for (std::size_t i = 0; i < z_hat.size(); ++i) out[i] = z_hat[i] / h;
  return out;
}

int feature_budget_linear(double time_bandwidth, double snr_linear,
                          int bits_per_feature, int num_features) {
  if (num_features < 1) {
    throw ContractError("feature_budget: num_features must be >= 1");
  }
  const double bits = time_bandwidth * std::log2(1.0 + snr_linear);
  const double features =
      std::min(std::floor(bits / static_cast<double>(bits_per_feature)),
               static_cast<double>(1 << 30));
  return std::min(static_cast<int>(features), num_features);
}

int feature_budget(const ChannelConfig& cfg, int num_features) {
  const double snr_linear = std::pow(10.0, cfg.snr_db / 10.0);
  return feature_budget_linear(cfg.slot_duration * cfg.bandwidth, snr_linear,
                               cfg.bits_per_feature, num_features);
}

int feature_budget_unclamped(const ChannelConfig& cfg) {
  return feature_budget(cfg, std::numeric_limits<int>::max());
}

int stream_budget(const ChannelConfig& cfg, int num_features, int streams) {
  if (streams < 1) throw ContractError("stream_budget: streams must be >= 1");
  return std::min(feature_budget_unclamped(cfg) / streams, num_features);
}

ChannelRealization make_realization(const ChannelConfig& cfg, int length,
                                    std::uint64_t seed, int* deep_fade_count) {
  RngStream rng(seed);
  ChannelRealization r;
  r.seed = seed;
  r.h = sample_rician(cfg.rician_factor, rng);
  while (std::abs(r.h) <= kDeepFadeThreshold) {
    if (deep_fade_count) ++*deep_fade_count;
    r.h = sample_rician(cfg.rician_factor, rng);
  }
  const double sigma2 = noise_sigma2(cfg.snr_db, cfg.avg_power);
  r.noise.resize(static_cast<std::size_t>(length));
  for (auto& n : r.noise) n = rng.complex_normal(sigma2);
  return r;
}

}  // namespace semlink
