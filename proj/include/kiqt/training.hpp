#pragma once

#include "kiqt/checkpoint.hpp"
#include "kiqt/config.hpp"
#include "kiqt/unet.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace kiqt {

/// One cross-validation fold: validation block i, training on the rest.
struct FoldPlan {
  int fold_index = 0;
  std::vector<int> train_slice_ids;
  std::vector<int> val_slice_ids;
  std::uint64_t derived_seed = 0;
};

/// Seeded partition of slice ids into `folds` near-equal validation
/// blocks (sizes differ by at most one; earlier blocks take the
/// remainder).
std::vector<FoldPlan> make_folds(const std::vector<int>& slice_ids, int folds, std::uint64_t seed);

struct TrainReport {
  double initial_train_loss = std::numeric_limits<double>::quiet_NaN();  // untrained model
  std::vector<double> train_loss;  // per epoch
  std::vector<double> val_loss;    // per epoch
  int best_epoch = -1;
  double best_val_loss = std::numeric_limits<double>::quiet_NaN();
  double wall_seconds = 0.0;
};

/// One training example; both maps share H and W.
struct TrainSample {
  FeatureMap input;
  FeatureMap target;
};

using TrainData = std::vector<TrainSample>;

/// Adam with decoupled weight decay. Bias-corrected; step counts are
/// shared across all parameters.
class AdamOptimizer {
public:
  AdamOptimizer(double lr, double weight_decay, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(std::vector<ParamRef<float>>& params);

private:
  double lr_, wd_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

/// Trains one fold with seeded shuffled mini-batches; saves a checkpoint
/// under `checkpoint_dir` whenever the validation loss improves and
/// returns the best model. Throws on non-finite loss, naming the
/// epoch/batch.
std::pair<UNet<float>, TrainReport> train_fold(const FoldPlan& plan, const ExperimentConfig& config,
                                               const TrainData& data, const UNetConfig& arch,
                                               const std::filesystem::path& checkpoint_dir);

/// Trains one model per fold (concurrently unless single_thread) and
/// persists all best checkpoints plus a run manifest under run_dir.
std::vector<std::pair<UNet<float>, TrainReport>> train_ensemble(const ExperimentConfig& config,
                                                                const TrainData& data, const UNetConfig& arch,
                                                                const std::filesystem::path& run_dir,
                                                                bool single_thread = false);

void write_fold_history(const TrainReport& report, const std::filesystem::path& path);

}  // namespace kiqt
