#include "semlink/dataset.hpp"

#include <string>

#include "semlink/errors.hpp"
#include "semlink/rng.hpp"

namespace semlink {

void DatasetConfig::validate() const {
  if (num_identities < 2) {
    throw ConfigError("dataset: num_identities must be >= 2");
  }
  if (num_colors < 2) throw ConfigError("dataset: num_colors must be >= 2");
  if (num_types < 2) throw ConfigError("dataset: num_types must be >= 2");
  if (views_per_identity < 2) {
    throw ConfigError(
        "dataset: views_per_identity must be >= 2 (triplet mining needs "
        "multiple views)");
  }
  if (image_width < 1 || image_height < 1) {
    throw ConfigError("dataset: image dimensions must be >= 1");
  }
  if (noise_std < 0.0) throw ConfigError("dataset: noise_std must be >= 0");
}

Dataset generate_dataset(const DatasetConfig& cfg) {
  cfg.validate();
  const int px = cfg.pixels();

  // Prototype patterns, one draw per (kind, index, pixel), all from the seed.
  const auto draw_protos = [&](std::uint64_t salt, int count) {
    std::vector<Tensor> protos;
    protos.reserve(count);
    RngStream rng(cfg.seed, salt);
    for (int i = 0; i < count; ++i) {
      Tensor t({1, static_cast<std::size_t>(px)});
      for (int p = 0; p < px; ++p) t[p] = rng.normal();
      protos.push_back(std::move(t));
    }
    return protos;
  };
  const std::vector<Tensor> id_protos = draw_protos(0x1d, cfg.num_identities);
  const std::vector<Tensor> color_protos = draw_protos(0xc0, cfg.num_colors);
  const std::vector<Tensor> type_protos = draw_protos(0x7e, cfg.num_types);

  Dataset ds;
  ds.cfg = cfg;
  for (int id = 0; id < cfg.num_identities; ++id) {
    const int color = id % cfg.num_colors;
    const int type = (id / cfg.num_colors) % cfg.num_types;
    RngStream noise_rng(cfg.seed, 0x5e, static_cast<std::uint64_t>(id));
    for (int view = 0; view < cfg.views_per_identity; ++view) {
      SyntheticSample s;
      s.identity = id;
      s.color = color;
      s.type = type;
      s.image = id_protos[id];
      for (int p = 0; p < px; ++p) {
        s.image[p] += color_protos[color][p] + type_protos[type][p] +
                      cfg.noise_std * noise_rng.normal();
      }
      if (view == cfg.views_per_identity - 2) {
        ds.query.push_back(std::move(s));
      } else if (view == cfg.views_per_identity - 1) {
        ds.gallery.push_back(std::move(s));
      } else {
        ds.train.push_back(std::move(s));
      }
    }
  }
  return ds;
}

Batch make_batch(const std::vector<SyntheticSample>& samples,
                 const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw ContractError("make_batch: empty index list");
  const std::size_t px = samples.at(indices[0]).image.size();
  Batch b;
  b.images = Tensor({indices.size(), px});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const SyntheticSample& s = samples.at(indices[r]);
    for (std::size_t p = 0; p < px; ++p) b.images[r * px + p] = s.image[p];
    b.identities.push_back(s.identity);
    b.colors.push_back(s.color);
    b.types.push_back(s.type);
  }
  return b;
}

Batch make_batch(const std::vector<SyntheticSample>& samples) {
  std::vector<std::size_t> idx(samples.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return make_batch(samples, idx);
}

}  // namespace semlink
