#include "kiqt/pipeline.hpp"

#include "kiqt/checkpoint.hpp"
#include "kiqt/dataset.hpp"
#include "kiqt/degrade.hpp"
#include "kiqt/ensemble.hpp"
#include "kiqt/fourier.hpp"
#include "kiqt/io.hpp"
#include "kiqt/metrics.hpp"
#include "kiqt/nifti.hpp"
#include "kiqt/phantom.hpp"
#include "kiqt/png.hpp"
#include "kiqt/rng.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

namespace kiqt {
namespace {

SamplingMask build_mask(const ExperimentConfig& cfg, Index h, Index w, std::uint64_t mask_seed,
                        double center_fraction) {
  switch (cfg.mask_pattern) {
    case MaskPattern::PseudoRadial:
      return make_pseudo_radial_mask(h, w, cfg.sampling_fraction, mask_seed);
    case MaskPattern::Cartesian:
      return make_cartesian_mask(h, w, cfg.sampling_fraction, center_fraction, mask_seed);
    case MaskPattern::Full:
      return make_full_mask(h, w);
  }
  throw ConfigError("build_mask: unknown pattern");
}

MagnitudeSlice zero_filled_magnitude(const ComplexSlice& masked_kspace) {
  Plane mag = magnitude_of(ifft2c(masked_kspace));
  const float peak = mag.maxCoeff();
  MagnitudeSlice out;
  if (peak > 0.0f) mag /= peak;
  out.data = std::move(mag);
  out.scale = peak > 0.0f ? static_cast<double>(peak) : 1.0;
  return out;
}

UNetConfig arch_for_profile(const std::string& profile, int channels) {
  if (profile == "desk") return UNetConfig::desk_scale(channels);
  if (profile == "full") return UNetConfig::full_scale(channels);
  throw ConfigError("unknown profile '" + profile + "' (expected desk|full)");
}

/// Index-sharded parallel for; results must be written to disjoint slots.
void parallel_for(int n, bool single_thread, const std::function<void(int)>& fn) {
  const unsigned workers = single_thread ? 1u : std::max(1u, std::min(4u, std::thread::hardware_concurrency()));
  if (workers == 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < workers; ++t)
    pool.emplace_back([&, t] {
      for (int i = static_cast<int>(t); i < n; i += static_cast<int>(workers)) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

std::filesystem::path resolve_data_path(const std::filesystem::path& p) {
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("KIQT_DATA_DIR"); root && *root) return std::filesystem::path(root) / p;
  return p;
}

RunManifest cmd_simulate(const SimulateOptions& opt) {
  validate(opt.config);
  if (opt.phantom_count <= 0 && opt.volumes.empty())
    throw ConfigError("simulate: need --phantom N or at least one volume path");

  std::vector<MagnitudeSlice> hf_slices;
  if (opt.phantom_count > 0) {
    if (!pool_compatible(opt.phantom_size, opt.phantom_size))
      throw ConfigError("simulate: phantom size must be a positive multiple of 8");
    hf_slices.reserve(static_cast<std::size_t>(opt.phantom_count));
    for (int i = 0; i < opt.phantom_count; ++i)
      hf_slices.push_back(
          make_phantom(opt.phantom_size, opt.phantom_size, derive_seed(opt.data_seed, 0xBEEF00 + static_cast<std::uint64_t>(i))));
  } else {
    for (const auto& vol : opt.volumes) {
      auto slices = ingest_volume(vol, opt.window_lo, opt.window_hi);
      std::move(slices.begin(), slices.end(), std::back_inserter(hf_slices));
    }
  }
  if (hf_slices.empty()) throw ConfigError("simulate: no slices produced");

  const Index h = hf_slices[0].rows(), w = hf_slices[0].cols();
  const std::uint64_t mask_seed = opt.mask_seed.value_or(opt.config.seed);
  const SamplingMask mask = build_mask(opt.config, h, w, mask_seed, opt.cartesian_center_fraction);

  ParamPrior prior = opt.prior_file ? ParamPrior::from_file(*opt.prior_file) : ParamPrior::for_regime(opt.regime);

  std::filesystem::create_directories(opt.out_dir / "slices");
  RunManifest manifest;
  manifest.kind = "dataset";
  manifest.config_hash = config_hash(opt.config);
  manifest.run_id = "sim-" + manifest.config_hash.substr(0, 8) + "-" + to_string(opt.regime) + "-s" +
                    std::to_string(opt.data_seed);
  manifest.created_at = timestamp_now();
  for (const auto& vol : opt.volumes) manifest.inputs.push_back(vol.string());
  manifest.meta["pattern"] = to_string(opt.config.mask_pattern);
  manifest.meta["fraction"] = format_double(opt.config.sampling_fraction, 10);
  manifest.meta["achieved_fraction"] = format_double(mask.achieved_fraction, 10);
  manifest.meta["regime"] = to_string(opt.regime);
  manifest.meta["seed"] = std::to_string(opt.data_seed);
  manifest.meta["mask_seed"] = std::to_string(mask_seed);
  manifest.meta["count"] = std::to_string(hf_slices.size());
  manifest.meta["height"] = std::to_string(h);
  manifest.meta["width"] = std::to_string(w);

  save_experiment_config(opt.config, opt.out_dir / "dataset.cfg");
  add_artifact(manifest, opt.out_dir, opt.out_dir / "dataset.cfg");
  write_plane(mask.data, Domain::KSpace, 1.0, opt.out_dir / "mask.kiqt");
  add_artifact(manifest, opt.out_dir, opt.out_dir / "mask.kiqt");

  for (std::size_t i = 0; i < hf_slices.size(); ++i) {
    SlicePair pair;
    pair.hf = std::move(hf_slices[i]);
    auto [input, target] = make_pair(pair.hf, prior, mask, derive_seed(opt.data_seed, 0x77A000 + i));
    pair.input = std::move(input);
    pair.target = std::move(target);
    pair.lf = zero_filled_magnitude(pair.input);
    const auto paths = pair_paths(opt.out_dir, static_cast<int>(i));
    write_pair(pair, paths);
    add_artifact(manifest, opt.out_dir, paths.input);
    add_artifact(manifest, opt.out_dir, paths.target);
    add_artifact(manifest, opt.out_dir, paths.lf);
    add_artifact(manifest, opt.out_dir, paths.hf);
  }

  write_manifest(manifest, opt.out_dir / "dataset_manifest.txt");
  verify_manifest(manifest, opt.out_dir);
  return manifest;
}

RunManifest cmd_train(const TrainOptions& opt) {
  validate(opt.config);
  const TrainData data = load_train_data(opt.data_dir, opt.config.iqt_domain);
  const int channels = opt.config.iqt_domain == IqtDomain::KSpace ? 2 : 1;
  const UNetConfig arch = arch_for_profile(opt.profile, channels);

  auto results = train_ensemble(opt.config, data, arch, opt.run_dir, opt.single_thread);

  if (!opt.quiet) {
    std::printf("fold  best_epoch  best_val_loss\n");
    for (std::size_t f = 0; f < results.size(); ++f)
      std::printf("%4zu  %10d  %13.6g\n", f, results[f].second.best_epoch, results[f].second.best_val_loss);
  }

  RunManifest manifest;
  manifest.kind = "train";
  manifest.config_hash = config_hash(opt.config);
  manifest.run_id = "train-" + manifest.config_hash.substr(0, 8) + "-" + opt.profile;
  manifest.created_at = timestamp_now();
  manifest.inputs.push_back(opt.data_dir.string());
  manifest.meta["profile"] = opt.profile;
  manifest.meta["iqt_domain"] = to_string(opt.config.iqt_domain);
  manifest.meta["folds"] = std::to_string(opt.config.folds);
  for (std::size_t f = 0; f < results.size(); ++f)
    manifest.meta["fold_" + std::to_string(f) + "_best_val_loss"] =
        format_double(results[f].second.best_val_loss, 9);

  save_experiment_config(opt.config, opt.run_dir / "config.cfg");
  add_artifact(manifest, opt.run_dir, opt.run_dir / "config.cfg");
  add_artifact(manifest, opt.run_dir, opt.run_dir / "train_manifest.txt");
  for (std::size_t f = 0; f < results.size(); ++f) {
    const auto fold_dir = opt.run_dir / ("fold_" + std::to_string(f));
    add_artifact(manifest, opt.run_dir, fold_dir / kCheckpointManifestName);
    add_artifact(manifest, opt.run_dir, fold_dir / kCheckpointWeightsName);
    add_artifact(manifest, opt.run_dir, fold_dir / "history.csv");
    add_artifact(manifest, opt.run_dir, fold_dir / "fold_manifest.txt");
  }
  write_manifest(manifest, opt.run_dir / "run_manifest.txt");
  verify_manifest(manifest, opt.run_dir);
  return manifest;
}

BaselineMetrics evaluate_lf_baseline(const std::filesystem::path& dataset_dir) {
  const int count = dataset_pair_count(dataset_dir);
  if (count < 1) throw ConfigError("evaluate_lf_baseline: empty dataset");
  std::vector<double> psnrs, ssims;
  for (int i = 0; i < count; ++i) {
    const auto paths = pair_paths(dataset_dir, i);
    const MagnitudeSlice lf = read_magnitude_slice(paths.lf);
    const MagnitudeSlice hf = read_magnitude_slice(paths.hf);
    psnrs.push_back(psnr(hf, lf));
    ssims.push_back(ssim(hf, lf));
  }
  const auto [pm, ps] = aggregate(psnrs);
  const auto [sm, ss] = aggregate(ssims);
  return {pm, ps, sm, ss, count};
}

RunManifest cmd_evaluate(const EvaluateOptions& opt) {
  const ExperimentConfig run_cfg = load_experiment_config(opt.run_dir / "config.cfg");
  const RunManifest test_manifest = read_manifest(opt.test_dir / "dataset_manifest.txt");
  const int count = dataset_pair_count(opt.test_dir);
  if (count < 1) throw ConfigError("evaluate: empty test set");

  std::vector<UNet<float>> models;
  for (int f = 0; f < run_cfg.folds; ++f)
    models.push_back(load_checkpoint(opt.run_dir / ("fold_" + std::to_string(f))));
  const bool kspace_mode = models[0].config().in_channels == 2;
  const std::string method = kspace_mode ? "kIQT" : "sIQT";

  const std::filesystem::path out_dir = opt.out_dir.empty() ? opt.run_dir / "eval" : opt.out_dir;
  std::filesystem::create_directories(out_dir / "recon");
  std::filesystem::create_directories(out_dir / "figures");

  struct SliceEval {
    double lf_psnr, lf_ssim, m_psnr, m_ssim;
  };
  std::vector<SliceEval> evals(static_cast<std::size_t>(count));
  std::vector<MagnitudeSlice> lf_keep(static_cast<std::size_t>(count)), hf_keep(static_cast<std::size_t>(count));
  std::vector<MagnitudeSlice> mean_keep(static_cast<std::size_t>(count));
  std::vector<Plane> std_keep(static_cast<std::size_t>(count));

  parallel_for(count, opt.single_thread, [&](int i) {
    const auto paths = pair_paths(opt.test_dir, i);
    const SlicePair pair = read_pair(paths);
    const EnsembleResult result = kspace_mode
                                      ? ensemble_predict(std::span<const UNet<float>>(models), pair.input)
                                      : ensemble_predict(std::span<const UNet<float>>(models), pair.lf);
    auto& e = evals[static_cast<std::size_t>(i)];
    e.lf_psnr = psnr(pair.hf, pair.lf);
    e.lf_ssim = ssim(pair.hf, pair.lf);
    e.m_psnr = psnr(pair.hf, result.mean_image);
    e.m_ssim = ssim(pair.hf, result.mean_image);
    lf_keep[static_cast<std::size_t>(i)] = pair.lf;
    hf_keep[static_cast<std::size_t>(i)] = pair.hf;
    mean_keep[static_cast<std::size_t>(i)] = result.mean_image;
    std_keep[static_cast<std::size_t>(i)] = result.std_map;
  });

  RunManifest manifest;
  manifest.kind = "eval";
  manifest.config_hash = config_hash(run_cfg);
  manifest.run_id = "eval-" + manifest.config_hash.substr(0, 8) + "-" + test_manifest.run_id;
  manifest.created_at = timestamp_now();
  manifest.inputs.push_back(opt.run_dir.string());
  manifest.inputs.push_back(opt.test_dir.string());
  const std::string pattern = test_manifest.meta.at("pattern");
  const double fraction = std::stod(test_manifest.meta.at("fraction"));
  manifest.meta["pattern"] = pattern;
  manifest.meta["fraction"] = format_double(fraction, 10);
  manifest.meta["method"] = method;
  manifest.meta["members"] = std::to_string(models.size());

  // Per-slice ensemble outputs in the interchange format.
  char name[64];
  for (int i = 0; i < count; ++i) {
    std::snprintf(name, sizeof(name), "recon/slice_%04d_%s_mean.kiqt", i, method.c_str());
    write_slice(mean_keep[static_cast<std::size_t>(i)], out_dir / name);
    add_artifact(manifest, out_dir, out_dir / name);
    std::snprintf(name, sizeof(name), "recon/slice_%04d_%s_std.kiqt", i, method.c_str());
    write_plane(std_keep[static_cast<std::size_t>(i)], Domain::Magnitude, 1.0, out_dir / name);
    add_artifact(manifest, out_dir, out_dir / name);
  }

  std::vector<double> lf_psnr, lf_ssim, m_psnr, m_ssim;
  for (const auto& e : evals) {
    lf_psnr.push_back(e.lf_psnr);
    lf_ssim.push_back(e.lf_ssim);
    m_psnr.push_back(e.m_psnr);
    m_ssim.push_back(e.m_ssim);
  }
  std::vector<MetricsRecord> rows(2);
  {
    const auto [pm, ps] = aggregate(lf_psnr);
    const auto [sm, ss] = aggregate(lf_ssim);
    rows[0] = {pattern, fraction, "LF", pm, ps, sm, ss, count};
  }
  {
    const auto [pm, ps] = aggregate(m_psnr);
    const auto [sm, ss] = aggregate(m_ssim);
    rows[1] = {pattern, fraction, method, pm, ps, sm, ss, count};
  }
  write_metrics_csv(rows, out_dir / "metrics.csv");
  add_artifact(manifest, out_dir, out_dir / "metrics.csv");

  // Figure panels over the first few test slices.
  const int k = std::min(opt.figure_slices, count);
  if (k > 0) {
    std::vector<std::vector<Plane>> recon_grid, error_grid, uq_grid;
    for (int i = 0; i < k; ++i)
      recon_grid.push_back({hf_keep[static_cast<std::size_t>(i)].data, lf_keep[static_cast<std::size_t>(i)].data,
                            mean_keep[static_cast<std::size_t>(i)].data});
    std::vector<Plane> lf_err_row, m_err_row, uq_row;
    double err_max = 0.0, uq_max = 0.0;
    for (int i = 0; i < k; ++i) {
      Plane e_lf = error_map(hf_keep[static_cast<std::size_t>(i)], lf_keep[static_cast<std::size_t>(i)]);
      Plane e_m = error_map(hf_keep[static_cast<std::size_t>(i)], mean_keep[static_cast<std::size_t>(i)]);
      err_max = std::max({err_max, static_cast<double>(e_lf.maxCoeff()), static_cast<double>(e_m.maxCoeff())});
      uq_max = std::max(uq_max, static_cast<double>(std_keep[static_cast<std::size_t>(i)].maxCoeff()));
      lf_err_row.push_back(std::move(e_lf));
      m_err_row.push_back(std::move(e_m));
      uq_row.push_back(std_keep[static_cast<std::size_t>(i)]);
    }
    error_grid = {lf_err_row, m_err_row};
    uq_grid = {uq_row};
    write_panel_png(recon_grid, 0.0, 1.0, Colormap::Gray, out_dir / "figures/reconstructions.png");
    write_panel_png(error_grid, 0.0, err_max > 0 ? err_max : 1.0, Colormap::Hot,
                    out_dir / "figures/error_maps.png");
    write_panel_png(uq_grid, 0.0, uq_max > 0 ? uq_max : 1.0, Colormap::Hot,
                    out_dir / "figures/uncertainty.png");
    add_artifact(manifest, out_dir, out_dir / "figures/reconstructions.png");
    add_artifact(manifest, out_dir, out_dir / "figures/error_maps.png");
    add_artifact(manifest, out_dir, out_dir / "figures/uncertainty.png");
  }

  write_manifest(manifest, out_dir / "eval_manifest.txt");
  verify_manifest(manifest, out_dir);

  if (!opt.quiet) {
    for (const auto& r : rows)
      std::printf("%-14s %4.2f  %-5s  PSNR %6.2f +- %5.2f   SSIM %6.4f +- %6.4f   n=%d\n", r.pattern.c_str(),
                  r.fraction, r.method.c_str(), r.psnr_mean, r.psnr_std, r.ssim_mean, r.ssim_std, r.n_slices);
  }
  return manifest;
}

std::string cmd_report(const ReportOptions& opt) {
  if (opt.eval_dirs.empty()) throw ConfigError("report: need at least one evaluated run");

  struct TaggedRow {
    std::string run_id;
    MetricsRecord row;
  };
  std::vector<TaggedRow> merged;
  for (const auto& dir : opt.eval_dirs) {
    const auto rows = read_metrics_csv(dir / "metrics.csv");
    std::string run_id = dir.filename().string();
    if (std::filesystem::exists(dir / "eval_manifest.txt"))
      run_id = read_manifest(dir / "eval_manifest.txt").run_id;
    for (const auto& r : rows) merged.push_back({run_id, r});
  }

  std::ostringstream table;
  table << "run_id,pattern,fraction,method,psnr_mean,psnr_std,ssim_mean,ssim_std,n_slices\n";
  for (const auto& t : merged) table << t.run_id << "," << to_csv_row(t.row) << "\n";

  if (!opt.out_csv.empty()) {
    std::ofstream out(opt.out_csv, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + opt.out_csv.string());
    out << table.str();
  }

  std::ostringstream pretty;
  pretty << "run_id                          pattern        frac  method  PSNR(mean+-std)    SSIM(mean+-std)\n";
  for (const auto& t : merged) {
    char line[256];
    std::snprintf(line, sizeof(line), "%-30s  %-13s  %4.2f  %-6s  %6.2f +- %5.2f    %6.4f +- %6.4f\n",
                  t.run_id.c_str(), t.row.pattern.c_str(), t.row.fraction, t.row.method.c_str(),
                  t.row.psnr_mean, t.row.psnr_std, t.row.ssim_mean, t.row.ssim_std);
    pretty << line;
  }
  return pretty.str();
}

}  // namespace kiqt
