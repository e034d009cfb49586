#include "kiqt/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>

namespace {

kiqt::ExperimentConfig load_config_or_default(const std::string& config_path) {
  if (!config_path.empty())
    return kiqt::load_experiment_config(kiqt::resolve_data_path(config_path));
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-field MRI k-space image quality transfer pipeline"};
  app.require_subcommand(1);

  std::string config_path, out_dir, data_dir, run_dir, test_dir, regime = "ind", pattern, domain, profile = "desk";
  std::string window, prior_file;
  int phantom = 0, size = 64, figure_slices = 2;
  double fraction = -1.0, center_fraction = 0.08;
  std::uint64_t seed = 0;
  bool seed_given = false, single_thread = false;
  std::uint64_t mask_seed = 0;
  bool mask_seed_given = false;
  std::vector<std::string> volumes, eval_dirs;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Experiment config file");
    cmd->add_flag("--single-thread", single_thread, "Disable all multi-threading (bit-reproducible mode)");
  };

  auto* sim = app.add_subcommand("simulate", "Synthesize paired low-field/high-field k-space slices");
  add_common(sim);
  sim->add_option("--phantom", phantom, "Generate N seeded ellipse phantoms instead of ingesting volumes");
  sim->add_option("--size", size, "Phantom slice size (multiple of 8)")->default_val(64);
  sim->add_option("--regime", regime, "Degradation prior: ind|ood")->default_val("ind");
  sim->add_option("--pattern", pattern, "Override mask pattern: radial|cartesian");
  sim->add_option("--fraction", fraction, "Override sampling fraction in (0,1]");
  sim->add_option("--seed", seed, "Data seed")->each([&](const std::string&) { seed_given = true; });
  sim->add_option("--mask-seed", mask_seed, "Mask seed (defaults to config seed)")
      ->each([&](const std::string&) { mask_seed_given = true; });
  sim->add_option("--out", out_dir, "Output dataset directory")->required();
  sim->add_option("--prior", prior_file, "Key-value file overriding the degradation prior");
  sim->add_option("--center-fraction", center_fraction, "Fully sampled central band for Cartesian masks")
      ->default_val(0.08);
  sim->add_option("--window", window, "Axial window LO:HI for ingested volumes");
  sim->add_option("volumes", volumes, "NIfTI volumes to ingest");

  auto* train = app.add_subcommand("train", "Cross-validation ensemble training");
  add_common(train);
  train->add_option("--data", data_dir, "Dataset directory from `simulate`")->required();
  train->add_option("--out", run_dir, "Run directory for checkpoints and manifests")->required();
  train->add_option("--profile", profile, "Model profile: desk|full")->default_val("desk");
  train->add_option("--domain", domain, "Override iqt domain: kspace|spatial");
  train->add_option("--seed", seed, "Override config seed")->each([&](const std::string&) { seed_given = true; });

  auto* eval = app.add_subcommand("evaluate", "Ensemble reconstruction, metrics CSV and figure panels");
  add_common(eval);
  eval->add_option("--run", run_dir, "Trained run directory")->required();
  eval->add_option("--test", test_dir, "Test dataset directory")->required();
  eval->add_option("--out", out_dir, "Output directory (default <run>/eval)");
  eval->add_option("--figure-slices", figure_slices, "Slices rendered into figure panels")->default_val(2);

  auto* report = app.add_subcommand("report", "Merge evaluation CSVs into one comparison table");
  report->add_option("runs", eval_dirs, "Evaluation output directories")->required();
  report->add_option("--out", out_dir, "Merged CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      kiqt::SimulateOptions opt;
      opt.config = load_config_or_default(config_path);
      if (!pattern.empty()) opt.config.mask_pattern = kiqt::parse_mask_pattern(pattern);
      if (fraction > 0.0) opt.config.sampling_fraction = fraction;
      opt.out_dir = kiqt::resolve_data_path(out_dir);
      opt.phantom_count = phantom;
      opt.phantom_size = size;
      opt.regime = kiqt::parse_regime(regime);
      opt.data_seed = seed_given ? seed : opt.config.seed;
      if (mask_seed_given) opt.mask_seed = mask_seed;
      opt.cartesian_center_fraction = center_fraction;
      if (!prior_file.empty()) opt.prior_file = kiqt::resolve_data_path(prior_file);
      if (!window.empty()) {
        const auto colon = window.find(':');
        if (colon == std::string::npos) throw kiqt::ConfigError("--window expects LO:HI");
        opt.window_lo = std::stol(window.substr(0, colon));
        opt.window_hi = std::stol(window.substr(colon + 1));
      }
      for (const auto& v : volumes) opt.volumes.push_back(kiqt::resolve_data_path(v));
      const auto manifest = kiqt::cmd_simulate(opt);
      std::printf("simulate: %s -> %zu artifacts, manifest hash %s\n", manifest.run_id.c_str(),
                  manifest.artifacts.size(), kiqt::manifest_hash(manifest).c_str());
    } else if (train->parsed()) {
      kiqt::TrainOptions opt;
      opt.config = load_config_or_default(config_path);
      if (!domain.empty()) opt.config.iqt_domain = kiqt::parse_iqt_domain(domain);
      if (seed_given) opt.config.seed = seed;
      opt.data_dir = kiqt::resolve_data_path(data_dir);
      opt.run_dir = kiqt::resolve_data_path(run_dir);
      opt.profile = profile;
      opt.single_thread = single_thread;
      const auto manifest = kiqt::cmd_train(opt);
      std::printf("train: %s complete, manifest hash %s\n", manifest.run_id.c_str(),
                  kiqt::manifest_hash(manifest).c_str());
    } else if (eval->parsed()) {
      kiqt::EvaluateOptions opt;
      opt.run_dir = kiqt::resolve_data_path(run_dir);
      opt.test_dir = kiqt::resolve_data_path(test_dir);
      if (!out_dir.empty()) opt.out_dir = kiqt::resolve_data_path(out_dir);
      opt.figure_slices = figure_slices;
      opt.single_thread = single_thread;
      const auto manifest = kiqt::cmd_evaluate(opt);
      std::printf("evaluate: %s complete, manifest hash %s\n", manifest.run_id.c_str(),
                  kiqt::manifest_hash(manifest).c_str());
    } else if (report->parsed()) {
      kiqt::ReportOptions opt;
      for (const auto& d : eval_dirs) opt.eval_dirs.push_back(kiqt::resolve_data_path(d));
      if (!out_dir.empty()) opt.out_csv = kiqt::resolve_data_path(out_dir);
      std::cout << kiqt::cmd_report(opt);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
