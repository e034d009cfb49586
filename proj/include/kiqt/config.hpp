#pragma once

#include "kiqt/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace kiqt {

/// One experiment = one (pattern, fraction, domain) condition plus the
/// training hyperparameters. Serialized as a flat key-value file with
/// exactly these keys: mask_pattern, sampling_fraction, iqt_domain, folds,
/// epochs, batch_size, learning_rate, weight_decay, seed.
struct ExperimentConfig {
  MaskPattern mask_pattern = MaskPattern::PseudoRadial;
  double sampling_fraction = 0.5;
  IqtDomain iqt_domain = IqtDomain::KSpace;
  int folds = 3;
  int epochs = 150;
  int batch_size = 8;
  double learning_rate = 1e-3;
  double weight_decay = 1e-6;
  std::uint64_t seed = 0;
};

void validate(const ExperimentConfig& cfg);

ExperimentConfig load_experiment_config(const std::filesystem::path& path);
void save_experiment_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

/// Canonical text form; the config hash is FNV-1a over this string, so it
/// changes iff some field changes.
std::string canonical_text(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

MaskPattern parse_mask_pattern(const std::string& text);
IqtDomain parse_iqt_domain(const std::string& text);
Regime parse_regime(const std::string& text);

/// Deterministic numeric formatting for configs, manifests and CSVs.
std::string format_double(double v, int precision = 6);

}  // namespace kiqt
