#include "semlink/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "semlink/errors.hpp"

namespace semlink {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(v);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects a number, got '" + v +
                      "'");
  }
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const std::int64_t i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects an integer, got '" +
                      v + "'");
  }
}

const char* kSections[] = {"dataset", "model", "channel", "train",
                           "experiment"};

const char* kDatasetKeys[] = {"identities",         "colors",
                              "types",              "views_per_identity",
                              "image_width",        "image_height",
                              "noise_std"};
const char* kModelKeys[] = {"feature_dim", "latent_features", "encoder_hidden",
                            "codec_hidden", "head_hidden"};
const char* kChannelKeys[] = {"rician_factor", "avg_power", "slot_duration",
                              "bandwidth", "bits_per_feature"};
const char* kTrainKeys[] = {
    "learning_rate", "batch_size",   "epochs_stage1", "epochs_stage2",
    "triplet_margin", "lambda_reid", "lambda_color",  "lambda_type",
    "snr_low_db",     "snr_high_db", "pk_identities", "pk_views",
    "cross_entropy",  "importance"};
const char* kExperimentKeys[] = {
    "snr_grid_db", "methods",           "modes",   "num_seeds", "base_seed",
    "eval_realizations", "workers", "output_dir"};

template <std::size_t N>
std::string key_list(const char* const (&keys)[N]) {
  std::string out;
  for (std::size_t i = 0; i < N; ++i) {
    if (i) out += ", ";
    out += keys[i];
  }
  return out;
}

[[noreturn]] void unknown_key(const std::string& section,
                              const std::string& key) {
  std::string valid;
  if (section == "dataset") valid = key_list(kDatasetKeys);
  else if (section == "model") valid = key_list(kModelKeys);
  else if (section == "channel") valid = key_list(kChannelKeys);
  else if (section == "train") valid = key_list(kTrainKeys);
  else valid = key_list(kExperimentKeys);
  throw ConfigError("config: unknown key '" + key + "' in [" + section +
                    "]; valid keys: " + valid);
}

void apply_key(ExperimentConfig& c, const std::string& section,
               const std::string& key, const std::string& value) {
  if (section == "dataset") {
    if (key == "identities") c.dataset.num_identities = (int)parse_int(key, value);
    else if (key == "colors") c.dataset.num_colors = (int)parse_int(key, value);
    else if (key == "types") c.dataset.num_types = (int)parse_int(key, value);
    else if (key == "views_per_identity") c.dataset.views_per_identity = (int)parse_int(key, value);
    else if (key == "image_width") c.dataset.image_width = (int)parse_int(key, value);
    else if (key == "image_height") c.dataset.image_height = (int)parse_int(key, value);
    else if (key == "noise_std") c.dataset.noise_std = parse_double(key, value);
    else unknown_key(section, key);
  } else if (section == "model") {
    if (key == "feature_dim") c.feature_dim = (int)parse_int(key, value);
    else if (key == "latent_features") c.latent_features = (int)parse_int(key, value);
    else if (key == "encoder_hidden") c.encoder_hidden = (int)parse_int(key, value);
    else if (key == "codec_hidden") c.codec_hidden = (int)parse_int(key, value);
    else if (key == "head_hidden") c.head_hidden = (int)parse_int(key, value);
    else unknown_key(section, key);
  } else if (section == "channel") {
    if (key == "rician_factor") c.channel.rician_factor = parse_double(key, value);
    else if (key == "avg_power") c.channel.avg_power = parse_double(key, value);
    else if (key == "slot_duration") c.channel.slot_duration = parse_double(key, value);
    else if (key == "bandwidth") c.channel.bandwidth = parse_double(key, value);
    else if (key == "bits_per_feature") c.channel.bits_per_feature = (int)parse_int(key, value);
    else unknown_key(section, key);
  } else if (section == "train") {
    if (key == "learning_rate") c.train.learning_rate = parse_double(key, value);
    else if (key == "batch_size") c.train.batch_size = (int)parse_int(key, value);
    else if (key == "epochs_stage1") c.train.epochs_stage1 = (int)parse_int(key, value);
    else if (key == "epochs_stage2") c.train.epochs_stage2 = (int)parse_int(key, value);
    else if (key == "triplet_margin") c.train.triplet_margin = parse_double(key, value);
    else if (key == "lambda_reid") c.train.lambda_reid = parse_double(key, value);
    else if (key == "lambda_color") c.train.lambda_color = parse_double(key, value);
    else if (key == "lambda_type") c.train.lambda_type = parse_double(key, value);
    else if (key == "snr_low_db") c.train.snr_low_db = parse_double(key, value);
    else if (key == "snr_high_db") c.train.snr_high_db = parse_double(key, value);
    else if (key == "pk_identities") c.train.pk_identities = (int)parse_int(key, value);
    else if (key == "pk_views") c.train.pk_views = (int)parse_int(key, value);
    else if (key == "cross_entropy") {
      if (value == "binary") c.train.ce = CrossEntropyVariant::kBinary;
      else if (value == "categorical") c.train.ce = CrossEntropyVariant::kCategorical;
      else throw ConfigError("config: cross_entropy must be binary or categorical");
    } else if (key == "importance") {
      if (value == "magnitude") c.train.combine = SensitivityCombine::kMagnitude;
      else if (value == "signed") c.train.combine = SensitivityCombine::kSigned;
      else throw ConfigError("config: importance must be magnitude or signed");
    } else unknown_key(section, key);
  } else if (section == "experiment") {
    if (key == "snr_grid_db") {
      c.snr_grid_db.clear();
      for (const std::string& s : split_list(value)) {
        c.snr_grid_db.push_back(parse_double(key, s));
      }
    } else if (key == "methods") {
      c.methods.clear();
      for (const std::string& s : split_list(value)) {
        c.methods.push_back(parse_policy(s));
      }
    } else if (key == "modes") {
      c.modes.clear();
      for (const std::string& s : split_list(value)) {
        c.modes.push_back(parse_mode(s));
      }
    } else if (key == "num_seeds") {
      c.num_seeds = (int)parse_int(key, value);
    } else if (key == "base_seed") {
      c.base_seed = (std::uint64_t)parse_int(key, value);
    } else if (key == "eval_realizations") {
      c.eval_realizations = (int)parse_int(key, value);
    } else if (key == "workers") {
      c.workers = (int)parse_int(key, value);
    } else if (key == "output_dir") {
      c.output_dir = value;
    } else {
      unknown_key(section, key);
    }
  }
}

}  // namespace

ModelConfig ExperimentConfig::model_config(CodingMode mode,
                                           TaskKind stc_task) const {
  ModelConfig m;
  m.input_dim = dataset.pixels();
  m.feature_dim = feature_dim;
  m.latent_complex = latent_features;
  m.encoder_hidden = encoder_hidden;
  m.codec_hidden = codec_hidden;
  m.head_hidden = head_hidden;
  m.tasks = make_task_specs(train, dataset, mode, stc_task);
  return m;
}

void ExperimentConfig::validate() const {
  dataset.validate();
  channel.validate();
  train.validate();
  if (feature_dim < 1 || latent_features < 1 || encoder_hidden < 1 ||
      codec_hidden < 1 || head_hidden < 1) {
    throw ConfigError("config: model sizes must be >= 1");
  }
  if (snr_grid_db.empty()) {
    throw ConfigError("config: snr_grid_db must not be empty");
  }
  if (methods.empty()) throw ConfigError("config: methods must not be empty");
  if (modes.empty()) throw ConfigError("config: modes must not be empty");
  if (num_seeds < 1) throw ConfigError("config: num_seeds must be >= 1");
  if (eval_realizations < 1) {
    throw ConfigError("config: eval_realizations must be >= 1");
  }
  if (workers < 0) throw ConfigError("config: workers must be >= 0");
  if (output_dir.empty()) {
    throw ConfigError("config: output_dir must not be empty");
  }
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  // The library-level channel default keeps the budget above L over the
  // whole grid; the sweep default makes it bind below 0 dB.
  c.channel.bandwidth = 2048.0;
  return c;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c = default_config();
  std::istringstream is(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": malformed section header '" + line + "'");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (std::find_if(std::begin(kSections), std::end(kSections),
                       [&](const char* s) { return section == s; }) ==
          std::end(kSections)) {
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": unknown section [" + section +
                          "]; valid sections: dataset, model, channel, "
                          "train, experiment");
      }
      continue;
    }
    const auto colon = line.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key: value', got '" + line + "'");
    }
    if (section.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": key outside of any [section]");
    }
    apply_key(c, section, trim(line.substr(0, colon)),
              trim(line.substr(colon + 1)));
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

namespace {
std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

std::string canonical_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "[dataset]\n";
  os << "identities: " << c.dataset.num_identities << "\n";
  os << "colors: " << c.dataset.num_colors << "\n";
  os << "types: " << c.dataset.num_types << "\n";
  os << "views_per_identity: " << c.dataset.views_per_identity << "\n";
  os << "image_width: " << c.dataset.image_width << "\n";
  os << "image_height: " << c.dataset.image_height << "\n";
  os << "noise_std: " << fmt_double(c.dataset.noise_std) << "\n";
  os << "\n[model]\n";
  os << "feature_dim: " << c.feature_dim << "\n";
  os << "latent_features: " << c.latent_features << "\n";
  os << "encoder_hidden: " << c.encoder_hidden << "\n";
  os << "codec_hidden: " << c.codec_hidden << "\n";
  os << "head_hidden: " << c.head_hidden << "\n";
  os << "\n[channel]\n";
  os << "rician_factor: " << fmt_double(c.channel.rician_factor) << "\n";
  os << "avg_power: " << fmt_double(c.channel.avg_power) << "\n";
  os << "slot_duration: " << fmt_double(c.channel.slot_duration) << "\n";
  os << "bandwidth: " << fmt_double(c.channel.bandwidth) << "\n";
  os << "bits_per_feature: " << c.channel.bits_per_feature << "\n";
  os << "\n[train]\n";
  os << "learning_rate: " << fmt_double(c.train.learning_rate) << "\n";
  os << "batch_size: " << c.train.batch_size << "\n";
  os << "epochs_stage1: " << c.train.epochs_stage1 << "\n";
  os << "epochs_stage2: " << c.train.epochs_stage2 << "\n";
  os << "triplet_margin: " << fmt_double(c.train.triplet_margin) << "\n";
  os << "lambda_reid: " << fmt_double(c.train.lambda_reid) << "\n";
  os << "lambda_color: " << fmt_double(c.train.lambda_color) << "\n";
  os << "lambda_type: " << fmt_double(c.train.lambda_type) << "\n";
  os << "snr_low_db: " << fmt_double(c.train.snr_low_db) << "\n";
  os << "snr_high_db: " << fmt_double(c.train.snr_high_db) << "\n";
  os << "pk_identities: " << c.train.pk_identities << "\n";
  os << "pk_views: " << c.train.pk_views << "\n";
  os << "cross_entropy: "
     << (c.train.ce == CrossEntropyVariant::kBinary ? "binary" : "categorical")
     << "\n";
  os << "importance: "
     << (c.train.combine == SensitivityCombine::kMagnitude ? "magnitude"
                                                           : "signed")
     << "\n";
  os << "\n[experiment]\n";
  os << "snr_grid_db: ";
  for (std::size_t i = 0; i < c.snr_grid_db.size(); ++i) {
    os << (i ? ", " : "") << fmt_double(c.snr_grid_db[i]);
  }
  os << "\n";
  os << "methods: ";
  for (std::size_t i = 0; i < c.methods.size(); ++i) {
    os << (i ? ", " : "") << policy_name(c.methods[i]);
  }
  os << "\n";
  os << "modes: ";
  for (std::size_t i = 0; i < c.modes.size(); ++i) {
    os << (i ? ", " : "") << mode_name(c.modes[i]);
  }
  os << "\n";
  os << "num_seeds: " << c.num_seeds << "\n";
  os << "base_seed: " << c.base_seed << "\n";
  os << "eval_realizations: " << c.eval_realizations << "\n";
  os << "workers: " << c.workers << "\n";
  os << "output_dir: " << c.output_dir << "\n";
  return os.str();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  const std::string text = canonical_config(cfg);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace semlink
