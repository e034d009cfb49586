#include "kiqt/config.hpp"

#include "kiqt/hash.hpp"
#include "kiqt/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

namespace kiqt {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

const std::string& require(const std::map<std::string, std::string>& kv, const std::string& key,
                           const std::filesystem::path& path) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw ConfigError("missing config key '" + key + "' in " + path.string());
  return it->second;
}

}  // namespace

std::string format_double(double v, int precision) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
  return buf;
}

MaskPattern parse_mask_pattern(const std::string& text) {
  const std::string t = lower(text);
  if (t == "pseudo_radial" || t == "radial" || t == "pseudo-radial") return MaskPattern::PseudoRadial;
  if (t == "cartesian") return MaskPattern::Cartesian;
  if (t == "full") return MaskPattern::Full;
  throw ConfigError("unknown mask_pattern '" + text + "' (expected pseudo_radial|cartesian)");
}

IqtDomain parse_iqt_domain(const std::string& text) {
  const std::string t = lower(text);
  if (t == "kspace" || t == "k-space") return IqtDomain::KSpace;
  if (t == "spatial") return IqtDomain::Spatial;
  throw ConfigError("unknown iqt_domain '" + text + "' (expected kspace|spatial)");
}

Regime parse_regime(const std::string& text) {
  const std::string t = lower(text);
  if (t == "ind") return Regime::InD;
  if (t == "ood") return Regime::Ood;
  throw ConfigError("unknown regime '" + text + "' (expected ind|ood)");
}

void validate(const ExperimentConfig& cfg) {
  if (!(cfg.sampling_fraction > 0.0 && cfg.sampling_fraction <= 1.0))
    throw ConfigError("sampling_fraction must be in (0, 1], got " + format_double(cfg.sampling_fraction));
  if (cfg.folds < 1) throw ConfigError("folds must be >= 1");
  if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (cfg.weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
}

std::string canonical_text(const ExperimentConfig& cfg) {
  std::string out;
  out += "mask_pattern = " + std::string(to_string(cfg.mask_pattern)) + "\n";
  out += "sampling_fraction = " + format_double(cfg.sampling_fraction, 10) + "\n";
  out += "iqt_domain = " + std::string(to_string(cfg.iqt_domain)) + "\n";
  out += "folds = " + std::to_string(cfg.folds) + "\n";
  out += "epochs = " + std::to_string(cfg.epochs) + "\n";
  out += "batch_size = " + std::to_string(cfg.batch_size) + "\n";
  out += "learning_rate = " + format_double(cfg.learning_rate, 10) + "\n";
  out += "weight_decay = " + format_double(cfg.weight_decay, 10) + "\n";
  out += "seed = " + std::to_string(cfg.seed) + "\n";
  return out;
}

std::string config_hash(const ExperimentConfig& cfg) { return to_hex(fnv1a64(canonical_text(cfg))); }

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  const auto kv = read_key_values(path);
  ExperimentConfig cfg;
  cfg.mask_pattern = parse_mask_pattern(require(kv, "mask_pattern", path));
  cfg.sampling_fraction = std::stod(require(kv, "sampling_fraction", path));
  cfg.iqt_domain = parse_iqt_domain(require(kv, "iqt_domain", path));
  cfg.folds = std::stoi(require(kv, "folds", path));
  cfg.epochs = std::stoi(require(kv, "epochs", path));
  cfg.batch_size = std::stoi(require(kv, "batch_size", path));
  cfg.learning_rate = std::stod(require(kv, "learning_rate", path));
  cfg.weight_decay = std::stod(require(kv, "weight_decay", path));
  cfg.seed = std::stoull(require(kv, "seed", path));
  validate(cfg);
  return cfg;
}

void save_experiment_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::map<std::string, std::string> kv{
      {"mask_pattern", to_string(cfg.mask_pattern)},
      {"sampling_fraction", format_double(cfg.sampling_fraction, 10)},
      {"iqt_domain", to_string(cfg.iqt_domain)},
      {"folds", std::to_string(cfg.folds)},
      {"epochs", std::to_string(cfg.epochs)},
      {"batch_size", std::to_string(cfg.batch_size)},
      {"learning_rate", format_double(cfg.learning_rate, 10)},
      {"weight_decay", format_double(cfg.weight_decay, 10)},
      {"seed", std::to_string(cfg.seed)},
  };
  write_key_values(kv, path);
}

}  // namespace kiqt
