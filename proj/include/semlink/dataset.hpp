#pragma once

#include <cstdint>
#include <vector>

#include "semlink/tensor.hpp"

namespace semlink {

struct DatasetConfig {
  int num_identities = 16;
  int num_colors = 4;
  int num_types = 4;
  int views_per_identity = 8;
  int image_width = 16;
  int image_height = 16;
  double noise_std = 0.6;
  std::uint64_t seed = 1;

  int pixels() const { return image_width * image_height; }
  void validate() const;
};

struct SyntheticSample {
  Tensor image;  // flat [1 x W*H]
  int identity = 0;
  int color = 0;
  int type = 0;
};

// Train / query / gallery splits. The last two views of every identity are
// held out (one to query, one to gallery), so the gallery covers every query
// identity and the splits are disjoint.
struct Dataset {
  DatasetConfig cfg;
  std::vector<SyntheticSample> train;
  std::vector<SyntheticSample> query;
  std::vector<SyntheticSample> gallery;
};

// Each image is identity prototype + color prototype + type prototype +
// gaussian pixel noise; the prototypes are drawn once from the seed and the
// (color, type) pair is a fixed function of the identity.
Dataset generate_dataset(const DatasetConfig& cfg);

// Stacks the samples at the given indices into [n x W*H] plus label vectors.
struct Batch {
  Tensor images;
  std::vector<int> identities;
  std::vector<int> colors;
  std::vector<int> types;
};

Batch make_batch(const std::vector<SyntheticSample>& samples,
                 const std::vector<std::size_t>& indices);
Batch make_batch(const std::vector<SyntheticSample>& samples);

}  // namespace semlink
