#include "kiqt/training.hpp"

#include "kiqt/hash.hpp"
#include "kiqt/io.hpp"
#include "kiqt/loss.hpp"
#include "kiqt/rng.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

namespace kiqt {

std::vector<FoldPlan> make_folds(const std::vector<int>& slice_ids, int folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("make_folds: folds must be >= 2");
  if (static_cast<int>(slice_ids.size()) < folds)
    throw ConfigError("make_folds: fewer slices (" + std::to_string(slice_ids.size()) + ") than folds (" +
                      std::to_string(folds) + ")");

  std::vector<int> shuffled = slice_ids;
  Rng rng(derive_seed(seed, 0xF07D));
  rng.shuffle(shuffled.begin(), shuffled.end());

  const std::size_t n = shuffled.size();
  const std::size_t base = n / static_cast<std::size_t>(folds);
  const std::size_t remainder = n % static_cast<std::size_t>(folds);

  std::vector<FoldPlan> plans;
  std::size_t cursor = 0;
  for (int f = 0; f < folds; ++f) {
    const std::size_t block = base + (static_cast<std::size_t>(f) < remainder ? 1 : 0);
    FoldPlan plan;
    plan.fold_index = f;
    plan.derived_seed = derive_seed(seed, 0x1000 + static_cast<std::uint64_t>(f));
    plan.val_slice_ids.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(cursor),
                              shuffled.begin() + static_cast<std::ptrdiff_t>(cursor + block));
    plan.train_slice_ids.reserve(n - block);
    plan.train_slice_ids.insert(plan.train_slice_ids.end(), shuffled.begin(),
                                shuffled.begin() + static_cast<std::ptrdiff_t>(cursor));
    plan.train_slice_ids.insert(plan.train_slice_ids.end(),
                                shuffled.begin() + static_cast<std::ptrdiff_t>(cursor + block), shuffled.end());
    cursor += block;
    plans.push_back(std::move(plan));
  }
  return plans;
}

AdamOptimizer::AdamOptimizer(double lr, double weight_decay, double beta1, double beta2, double eps)
    : lr_(lr), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void AdamOptimizer::step(std::vector<ParamRef<float>>& params) {
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(static_cast<std::size_t>(params[i].size()), 0.0);
      v_[i].assign(static_cast<std::size_t>(params[i].size()), 0.0);
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    auto& m = m_[i];
    auto& v = v_[i];
    for (Index k = 0; k < p.size(); ++k) {
      const double g = static_cast<double>(p.grad[k]);
      m[static_cast<std::size_t>(k)] = beta1_ * m[static_cast<std::size_t>(k)] + (1.0 - beta1_) * g;
      v[static_cast<std::size_t>(k)] = beta2_ * v[static_cast<std::size_t>(k)] + (1.0 - beta2_) * g * g;
      const double m_hat = m[static_cast<std::size_t>(k)] / bc1;
      const double v_hat = v[static_cast<std::size_t>(k)] / bc2;
      const double value = static_cast<double>(p.value[k]);
      p.value[k] = static_cast<float>(value - lr_ * (m_hat / (std::sqrt(v_hat) + eps_) + wd_ * value));
    }
  }
}

namespace {

double validation_loss(const UNet<float>& net, const TrainData& data, const std::vector<int>& ids) {
  if (ids.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for (const int id : ids) {
    const auto& s = data[static_cast<std::size_t>(id)];
    total += static_cast<double>(combined_loss<float>(net.infer(s.input).data, s.target.data));
  }
  return total / static_cast<double>(ids.size());
}

}  // namespace

std::pair<UNet<float>, TrainReport> train_fold(const FoldPlan& plan, const ExperimentConfig& config,
                                               const TrainData& data, const UNetConfig& arch,
                                               const std::filesystem::path& checkpoint_dir) {
  validate(config);
  const auto t_start = std::chrono::steady_clock::now();

  UNet<float> net = UNet<float>::build(arch, derive_seed(plan.derived_seed, 0x100));
  UNet<float> best = net;
  TrainReport report;

  std::filesystem::create_directories(checkpoint_dir);
  if (config.epochs == 0) save_checkpoint(net, checkpoint_dir);

  AdamOptimizer adam(config.learning_rate, config.weight_decay);
  auto params = net.params();
  typename UNet<float>::Workspace ws;
  Rng shuffle_rng(derive_seed(plan.derived_seed, 0x200));
  std::vector<int> order = plan.train_slice_ids;

  if (config.epochs > 0 && !order.empty()) report.initial_train_loss = validation_loss(net, data, order);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order.begin(), order.end());
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(order.size(), at + static_cast<std::size_t>(config.batch_size));
      const auto batch_n = static_cast<float>(stop - at);
      net.zero_grads();
      double batch_loss = 0.0;
      for (std::size_t s = at; s < stop; ++s) {
        const auto& sample = data[static_cast<std::size_t>(order[s])];
        net.forward(sample.input, ws);
        batch_loss += static_cast<double>(combined_loss<float>(ws.out.data, sample.target.data));
        PlaneT<float> grad = combined_loss_grad<float>(ws.out.data, sample.target.data) / batch_n;
        FeatureMap grad_map;
        grad_map.data = std::move(grad);
        grad_map.h = ws.out.h;
        grad_map.w = ws.out.w;
        net.backward(grad_map, ws);
      }
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("train_fold: non-finite loss at fold " + std::to_string(plan.fold_index) +
                                 ", epoch " + std::to_string(epoch) + ", batch " +
                                 std::to_string(at / static_cast<std::size_t>(config.batch_size)));
      adam.step(params);
      epoch_loss += batch_loss;
      seen += stop - at;
    }
    report.train_loss.push_back(epoch_loss / static_cast<double>(seen));

    const double val = validation_loss(net, data, plan.val_slice_ids);
    report.val_loss.push_back(val);
    if (!std::isfinite(val))
      throw std::runtime_error("train_fold: non-finite validation loss at fold " +
                               std::to_string(plan.fold_index) + ", epoch " + std::to_string(epoch));
    if (report.best_epoch < 0 || val < report.best_val_loss) {
      report.best_epoch = epoch;
      report.best_val_loss = val;
      best = net;
      save_checkpoint(best, checkpoint_dir);
    }
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return {std::move(best), std::move(report)};
}

void write_fold_history(const TrainReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < report.train_loss.size(); ++e)
    out << e << "," << format_double(report.train_loss[e], 9) << "," << format_double(report.val_loss[e], 9)
        << "\n";
}

std::vector<std::pair<UNet<float>, TrainReport>> train_ensemble(const ExperimentConfig& config,
                                                                const TrainData& data, const UNetConfig& arch,
                                                                const std::filesystem::path& run_dir,
                                                                bool single_thread) {
  validate(config);
  std::vector<int> ids(data.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::vector<FoldPlan> plans;
  if (config.folds == 1) {
    // Degenerate single-model run: train on everything, track the
    // validation loss on the same slices.
    FoldPlan plan;
    plan.fold_index = 0;
    plan.train_slice_ids = ids;
    plan.val_slice_ids = ids;
    plan.derived_seed = derive_seed(config.seed, 0x1000);
    plans.push_back(std::move(plan));
  } else {
    plans = make_folds(ids, config.folds, config.seed);
  }

  std::filesystem::create_directories(run_dir);
  std::vector<std::pair<UNet<float>, TrainReport>> results(plans.size());

  auto run_one = [&](std::size_t f) {
    const auto fold_dir = run_dir / ("fold_" + std::to_string(f));
    results[f] = train_fold(plans[f], config, data, arch, fold_dir);
    write_fold_history(results[f].second, fold_dir / "history.csv");

    std::map<std::string, std::string> kv{
        {"fold_index", std::to_string(f)},
        {"derived_seed", std::to_string(plans[f].derived_seed)},
        {"train_slices", std::to_string(plans[f].train_slice_ids.size())},
        {"val_slices", std::to_string(plans[f].val_slice_ids.size())},
        {"initial_train_loss", format_double(results[f].second.initial_train_loss, 9)},
        {"best_epoch", std::to_string(results[f].second.best_epoch)},
        {"best_val_loss", format_double(results[f].second.best_val_loss, 9)},
    };
    write_key_values(kv, fold_dir / "fold_manifest.txt");
  };

  if (single_thread || plans.size() == 1) {
    for (std::size_t f = 0; f < plans.size(); ++f) run_one(f);
  } else {
    // Folds are fully independent (own model, own checkpoint dir), so the
    // results match the sequential run bit for bit.
    std::vector<std::thread> workers;
    workers.reserve(plans.size());
    for (std::size_t f = 0; f < plans.size(); ++f) workers.emplace_back(run_one, f);
    for (auto& w : workers) w.join();
  }

  std::map<std::string, std::string> kv{
      {"config_hash", config_hash(config)},
      {"folds", std::to_string(config.folds)},
      {"seed", std::to_string(config.seed)},
      {"iqt_domain", to_string(config.iqt_domain)},
      {"encoder_channels", std::to_string(arch.encoder_channels[0]) + "," +
                               std::to_string(arch.encoder_channels[1]) + "," +
                               std::to_string(arch.encoder_channels[2])},
      {"bottleneck_channels", std::to_string(arch.bottleneck_channels)},
      {"in_channels", std::to_string(arch.in_channels)},
  };
  for (std::size_t f = 0; f < results.size(); ++f)
    kv["fold_" + std::to_string(f) + "_best_val_loss"] = format_double(results[f].second.best_val_loss, 9);
  write_key_values(kv, run_dir / "train_manifest.txt");

  return results;
}

}  // namespace kiqt
