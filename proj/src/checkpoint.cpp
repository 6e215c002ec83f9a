#include "semlink/checkpoint.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "semlink/errors.hpp"

namespace semlink {

namespace {

constexpr char kMagic[4] = {'S', 'L', 'N', 'K'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_str(std::ostream& os, const std::string& s) {
  put_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
double get_f64(std::istream& is) {
  double v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
std::string get_str(std::istream& is) {
  std::string s(get_u64(is), '\0');
  is.read(s.data(), static_cast<std::streamsize>(s.size()));
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const Pipeline& pipeline,
                     const DatasetConfig& dataset) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write checkpoint '" + path + "'");
  os.write(kMagic, sizeof kMagic);
  put_u32(os, kVersion);

  put_u32(os, dataset.num_identities);
  put_u32(os, dataset.num_colors);
  put_u32(os, dataset.num_types);
  put_u32(os, dataset.views_per_identity);
  put_u32(os, dataset.image_width);
  put_u32(os, dataset.image_height);
  put_f64(os, dataset.noise_std);
  put_u64(os, dataset.seed);

  const ModelConfig& m = pipeline.config();
  put_u32(os, m.input_dim);
  put_u32(os, m.feature_dim);
  put_u32(os, m.latent_complex);
  put_u32(os, m.encoder_hidden);
  put_u32(os, m.codec_hidden);
  put_u32(os, m.head_hidden);
  put_u32(os, static_cast<std::uint32_t>(m.tasks.size()));
  for (const TaskSpec& t : m.tasks) {
    put_u32(os, static_cast<std::uint32_t>(t.kind));
    put_u32(os, t.classes);
    put_f64(os, t.weight);
  }

  const ParamStore& ps = pipeline.params();
  put_u64(os, ps.count());
  for (std::size_t i = 0; i < ps.count(); ++i) {
    const auto& e = ps.entry(i);
    put_str(os, e.name);
    put_u64(os, e.value.rank());
    for (std::size_t d : e.value.shape()) put_u64(os, d);
    os.write(reinterpret_cast<const char*>(e.value.data()),
             static_cast<std::streamsize>(e.value.size() * sizeof(double)));
  }
  if (!os) throw IoError("short write on checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read checkpoint '" + path + "'");
  char magic[4];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw IoError("'" + path + "' is not a checkpoint file");
  }
  const std::uint32_t version = get_u32(is);
  if (version != kVersion) {
    throw IoError("checkpoint version " + std::to_string(version) +
                  " not supported");
  }

  Checkpoint c;
  c.dataset.num_identities = static_cast<int>(get_u32(is));
  c.dataset.num_colors = static_cast<int>(get_u32(is));
  c.dataset.num_types = static_cast<int>(get_u32(is));
  c.dataset.views_per_identity = static_cast<int>(get_u32(is));
  c.dataset.image_width = static_cast<int>(get_u32(is));
  c.dataset.image_height = static_cast<int>(get_u32(is));
  c.dataset.noise_std = get_f64(is);
  c.dataset.seed = get_u64(is);

  c.model.input_dim = static_cast<int>(get_u32(is));
  c.model.feature_dim = static_cast<int>(get_u32(is));
  c.model.latent_complex = static_cast<int>(get_u32(is));
  c.model.encoder_hidden = static_cast<int>(get_u32(is));
  c.model.codec_hidden = static_cast<int>(get_u32(is));
  c.model.head_hidden = static_cast<int>(get_u32(is));
  const std::uint32_t num_tasks = get_u32(is);
  for (std::uint32_t i = 0; i < num_tasks; ++i) {
    TaskSpec t;
    t.kind = static_cast<TaskKind>(get_u32(is));
    t.classes = static_cast<int>(get_u32(is));
    t.weight = get_f64(is);
    c.model.tasks.push_back(t);
  }

  const std::uint64_t num_params = get_u64(is);
  for (std::uint64_t i = 0; i < num_params; ++i) {
    std::string name = get_str(is);
    std::vector<std::size_t> shape(get_u64(is));
    for (std::size_t& d : shape) d = get_u64(is);
    Tensor t(shape);
    is.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    c.params.emplace_back(std::move(name), std::move(t));
  }
  if (!is) throw IoError("truncated checkpoint '" + path + "'");
  return c;
}

Pipeline restore_pipeline(const Checkpoint& ckpt) {
  Pipeline p(ckpt.model, /*init_seed=*/0);
  if (ckpt.params.size() != p.params().count()) {
    throw IoError("checkpoint parameter count does not match model config");
  }
  for (const auto& [name, value] : ckpt.params) {
    Tensor& dst = p.params().get(name);
    if (!dst.same_shape(value)) {
      throw IoError("checkpoint parameter '" + name + "' has shape " +
                    value.shape_str() + ", expected " + dst.shape_str());
    }
    dst = value;
  }
  return p;
}

void save_importance(const std::string& path, const ImportanceVector& s) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write importance file '" + path + "'");
  os << "importance v1\n";
  os << "L: " << s.values.size() << "\n";
  os << "lambda:";
  char buf[64];
  for (double w : s.task_weights) {
    std::snprintf(buf, sizeof buf, " %.17g", w);
    os << buf;
  }
  os << "\n";
  for (double v : s.values) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v);
    os << buf;
  }
  if (!os) throw IoError("short write on importance file '" + path + "'");
}

ImportanceVector load_importance(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read importance file '" + path + "'");
  std::string line;
  if (!std::getline(is, line) || line != "importance v1") {
    throw IoError("'" + path + "' is not an importance file");
  }
  std::size_t len = 0;
  if (!std::getline(is, line) || std::sscanf(line.c_str(), "L: %zu", &len) != 1) {
    throw IoError("importance file '" + path + "' is missing the L header");
  }
  if (!std::getline(is, line) || line.rfind("lambda:", 0) != 0) {
    throw IoError("importance file '" + path + "' is missing the lambda header");
  }
  ImportanceVector s;
  {
    std::istringstream ls(line.substr(7));
    double w;
    while (ls >> w) s.task_weights.push_back(w);
  }
  s.values.reserve(len);
  double v;
  while (is >> v) s.values.push_back(v);
  if (s.values.size() != len) {
    throw IoError("importance file '" + path + "' has " +
                  std::to_string(s.values.size()) + " values, header says " +
                  std::to_string(len));
  }
  return s;
}

}  // namespace semlink
