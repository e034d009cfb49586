#pragma once

#include "kiqt/config.hpp"
#include "kiqt/manifest.hpp"
#include "kiqt/types.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace kiqt {

/// Synthesize a paired dataset (undersampled low-field k-space + fully
/// sampled high-field k-space, plus the matching magnitude images) from
/// seeded phantoms or ingested volumes.
struct SimulateOptions {
  ExperimentConfig config;
  std::filesystem::path out_dir;
  int phantom_count = 0;  // > 0 selects the built-in phantom generator
  Index phantom_size = 64;
  std::vector<std::filesystem::path> volumes;
  Index window_lo = 0, window_hi = 0;  // axial window for ingested volumes
  Regime regime = Regime::InD;
  std::optional<std::filesystem::path> prior_file;
  std::uint64_t data_seed = 0;
  std::optional<std::uint64_t> mask_seed;  // defaults to config.seed so train/test share the acquisition mask
  double cartesian_center_fraction = 0.08;
};

RunManifest cmd_simulate(const SimulateOptions& opt);

struct TrainOptions {
  ExperimentConfig config;
  std::filesystem::path data_dir;
  std::filesystem::path run_dir;
  std::string profile = "desk";  // desk | full
  bool single_thread = false;
  bool quiet = false;
};

RunManifest cmd_train(const TrainOptions& opt);

struct EvaluateOptions {
  std::filesystem::path run_dir;
  std::filesystem::path test_dir;
  std::filesystem::path out_dir;  // empty -> <run_dir>/eval
  int figure_slices = 2;
  bool single_thread = false;
  bool quiet = false;
};

RunManifest cmd_evaluate(const EvaluateOptions& opt);

/// Evaluate only the low-field baseline of a dataset (no models needed).
struct BaselineMetrics {
  double psnr_mean, psnr_std, ssim_mean, ssim_std;
  int n_slices;
};
BaselineMetrics evaluate_lf_baseline(const std::filesystem::path& dataset_dir);

struct ReportOptions {
  std::vector<std::filesystem::path> eval_dirs;  // each contains metrics.csv
  std::filesystem::path out_csv;                 // merged comparison table
};

/// Merges evaluation CSVs into one comparison table tagged by run id;
/// returns the rendered text table.
std::string cmd_report(const ReportOptions& opt);

/// $KIQT_DATA_DIR-relative resolution for CLI path arguments.
std::filesystem::path resolve_data_path(const std::filesystem::path& p);

}  // namespace kiqt
