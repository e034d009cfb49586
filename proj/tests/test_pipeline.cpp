#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kiqt/dataset.hpp"
#include "kiqt/io.hpp"
#include "kiqt/metrics.hpp"
#include "kiqt/pipeline.hpp"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;
using namespace kiqt;

namespace {

fs::path temp_root(const std::string& leaf) {
  const auto dir = fs::temp_directory_path() / "kiqt_test_pipeline" / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.mask_pattern = MaskPattern::PseudoRadial;
  cfg.sampling_fraction = 0.5;
  cfg.iqt_domain = IqtDomain::KSpace;
  cfg.folds = 2;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.learning_rate = 1e-3;
  cfg.weight_decay = 1e-6;
  cfg.seed = 4242;
  return cfg;
}

SimulateOptions tiny_sim(const fs::path& out, Regime regime, std::uint64_t data_seed, int count = 10) {
  SimulateOptions opt;
  opt.config = tiny_config();
  opt.out_dir = out;
  opt.phantom_count = count;
  opt.phantom_size = 32;
  opt.regime = regime;
  opt.data_seed = data_seed;
  return opt;
}

std::string file_text(const fs::path& p) {
  std::ifstream in(p);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("simulate: artifacts, manifest verification, deterministic manifest hash") {
  const auto root = temp_root("simulate");

  const RunManifest a = cmd_simulate(tiny_sim(root / "a", Regime::InD, 1));
  CHECK(a.kind == "dataset");
  CHECK(a.meta.at("regime") == "ind");
  CHECK(a.meta.at("count") == "10");
  CHECK(dataset_pair_count(root / "a") == 10);
  CHECK(fs::exists(root / "a" / "mask.kiqt"));
  verify_manifest(read_manifest(root / "a" / "dataset_manifest.txt"), root / "a");

  // Re-run with identical arguments: identical manifest hash.
  const RunManifest b = cmd_simulate(tiny_sim(root / "b", Regime::InD, 1));
  CHECK(manifest_hash(a) == manifest_hash(b));

  // Different data seed changes it; OOD regime is recorded.
  const RunManifest c = cmd_simulate(tiny_sim(root / "c", Regime::Ood, 2));
  CHECK(manifest_hash(c) != manifest_hash(a));
  CHECK(c.meta.at("regime") == "ood");
  CHECK(read_manifest(root / "c" / "dataset_manifest.txt").meta.at("regime") == "ood");
}

TEST_CASE("simulate requires phantoms or volumes") {
  SimulateOptions opt;
  opt.config = tiny_config();
  opt.out_dir = temp_root("simulate_empty");
  CHECK_THROWS_AS(cmd_simulate(opt), ConfigError);
}

TEST_CASE("full tiny pipeline: train, evaluate, report, byte-identical rerun") {
  const auto root = temp_root("full");

  cmd_simulate(tiny_sim(root / "train_data", Regime::InD, 11, 12));
  cmd_simulate(tiny_sim(root / "test_data", Regime::Ood, 22, 4));

  TrainOptions tr;
  tr.config = tiny_config();
  tr.data_dir = root / "train_data";
  tr.run_dir = root / "run";
  tr.profile = "desk";
  tr.single_thread = true;
  tr.quiet = true;
  const RunManifest train_manifest = cmd_train(tr);
  CHECK(fs::exists(root / "run" / "fold_0" / "weights.bin"));
  CHECK(fs::exists(root / "run" / "fold_1" / "weights.bin"));
  verify_manifest(read_manifest(root / "run" / "run_manifest.txt"), root / "run");

  EvaluateOptions ev;
  ev.run_dir = root / "run";
  ev.test_dir = root / "test_data";
  ev.single_thread = true;
  ev.quiet = true;
  cmd_evaluate(ev);

  const auto rows = read_metrics_csv(root / "run" / "eval" / "metrics.csv");
  REQUIRE(rows.size() == 2);  // |patterns| x |fractions| x |methods| = 1*1*2
  CHECK(rows[0].method == "LF");
  CHECK(rows[1].method == "kIQT");
  CHECK(rows[0].pattern == "pseudo_radial");
  CHECK(rows[0].fraction == doctest::Approx(0.5));
  CHECK(rows[0].n_slices == 4);
  verify_manifest(read_manifest(root / "run" / "eval" / "eval_manifest.txt"), root / "run" / "eval");
  CHECK(fs::exists(root / "run" / "eval" / "figures" / "reconstructions.png"));
  CHECK(fs::exists(root / "run" / "eval" / "figures" / "error_maps.png"));
  CHECK(fs::exists(root / "run" / "eval" / "figures" / "uncertainty.png"));
  CHECK(fs::exists(root / "run" / "eval" / "recon" / "slice_0000_kIQT_mean.kiqt"));
  CHECK(fs::exists(root / "run" / "eval" / "recon" / "slice_0000_kIQT_std.kiqt"));

  // PNG signature sanity.
  {
    std::ifstream png(root / "run" / "eval" / "figures" / "uncertainty.png", std::ios::binary);
    unsigned char sig[8];
    png.read(reinterpret_cast<char*>(sig), 8);
    CHECK(sig[0] == 0x89);
    CHECK(sig[1] == 'P');
  }

  // Determinism: full single-threaded rerun gives a byte-identical CSV.
  cmd_simulate(tiny_sim(root / "train_data2", Regime::InD, 11, 12));
  cmd_simulate(tiny_sim(root / "test_data2", Regime::Ood, 22, 4));
  TrainOptions tr2 = tr;
  tr2.data_dir = root / "train_data2";
  tr2.run_dir = root / "run2";
  cmd_train(tr2);
  EvaluateOptions ev2 = ev;
  ev2.run_dir = root / "run2";
  ev2.test_dir = root / "test_data2";
  cmd_evaluate(ev2);
  CHECK(file_text(root / "run" / "eval" / "metrics.csv") == file_text(root / "run2" / "eval" / "metrics.csv"));

  // LF baseline at fraction 1.0 equals direct metrics of the simulate
  // output (no model involved).
  auto full_opt = tiny_sim(root / "full_data", Regime::Ood, 22, 4);
  full_opt.config.sampling_fraction = 1.0;
  cmd_simulate(full_opt);
  const BaselineMetrics direct = evaluate_lf_baseline(root / "full_data");
  std::vector<double> psnrs, ssims;
  for (int i = 0; i < 4; ++i) {
    const auto paths = pair_paths(root / "full_data", i);
    const MagnitudeSlice lf = read_magnitude_slice(paths.lf);
    const MagnitudeSlice hf = read_magnitude_slice(paths.hf);
    psnrs.push_back(psnr(hf, lf));
    ssims.push_back(ssim(hf, lf));
  }
  CHECK(direct.psnr_mean == doctest::Approx(aggregate(psnrs).first).epsilon(1e-12));
  CHECK(direct.ssim_mean == doctest::Approx(aggregate(ssims).first).epsilon(1e-12));

  // Report merges CSVs from multiple runs, tagged by run id.
  ReportOptions rep;
  rep.eval_dirs = {root / "run" / "eval", root / "run2" / "eval"};
  rep.out_csv = root / "report.csv";
  const std::string table = cmd_report(rep);
  CHECK(table.find("kIQT") != std::string::npos);
  const std::string merged = file_text(root / "report.csv");
  CHECK(merged.find("run_id,pattern,fraction,method") == 0);
  // both runs contribute rows for the same condition
  CHECK(std::count(merged.begin(), merged.end(), '\n') == 5);  // header + 2 rows x 2 runs

  // Malformed CSV: schema error names the column.
  {
    std::ofstream bad(root / "run" / "eval" / "metrics.csv", std::ios::trunc);
    bad << "pattern,fraction,approach,psnr_mean,psnr_std,ssim_mean,ssim_std,n_slices\n";
  }
  CHECK_THROWS_WITH_AS(cmd_report(rep), doctest::Contains("method"), FormatError);
}

TEST_CASE("spatial-domain training consumes magnitude pairs") {
  const auto root = temp_root("spatial");
  auto sim = tiny_sim(root / "data", Regime::InD, 5, 8);
  sim.config.iqt_domain = IqtDomain::Spatial;
  cmd_simulate(sim);

  TrainOptions tr;
  tr.config = sim.config;
  tr.data_dir = root / "data";
  tr.run_dir = root / "run";
  tr.profile = "desk";
  tr.single_thread = true;
  tr.quiet = true;
  cmd_train(tr);

  EvaluateOptions ev;
  ev.run_dir = root / "run";
  ev.test_dir = root / "data";
  ev.single_thread = true;
  ev.quiet = true;
  cmd_evaluate(ev);
  const auto rows = read_metrics_csv(root / "run" / "eval" / "metrics.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].method == "sIQT");
}

TEST_CASE("epochs = 0 is a valid no-op training run") {
  const auto root = temp_root("noop");
  cmd_simulate(tiny_sim(root / "data", Regime::InD, 31, 6));

  TrainOptions tr;
  tr.config = tiny_config();
  tr.config.epochs = 0;
  tr.data_dir = root / "data";
  tr.run_dir = root / "run";
  tr.profile = "desk";
  tr.single_thread = true;
  tr.quiet = true;
  cmd_train(tr);
  CHECK(fs::exists(root / "run" / "fold_0" / "weights.bin"));

  // Evaluation still works on the untrained checkpoints.
  EvaluateOptions ev;
  ev.run_dir = root / "run";
  ev.test_dir = root / "data";
  ev.single_thread = true;
  ev.quiet = true;
  cmd_evaluate(ev);
  CHECK(read_metrics_csv(root / "run" / "eval" / "metrics.csv").size() == 2);
}

TEST_CASE("simulate ingests volumes through the axial window") {
  const auto root = temp_root("volumes");

  // Minimal uint8 NIfTI-1 volume with a bright centered block.
  const Index nx = 48, ny = 40, nz = 8;
  std::vector<std::uint8_t> vox(static_cast<std::size_t>(nx * ny * nz), 0);
  for (Index z = 0; z < nz; ++z)
    for (Index y = 10; y < 30; ++y)
      for (Index x = 12; x < 36; ++x)
        vox[static_cast<std::size_t>((z * ny + y) * nx + x)] = static_cast<std::uint8_t>(150 + 10 * (z % 4));
  {
    std::vector<char> hdr(348, 0);
    const std::int32_t sizeof_hdr = 348;
    std::memcpy(hdr.data(), &sizeof_hdr, 4);
    std::int16_t dim[8] = {3, static_cast<std::int16_t>(nx), static_cast<std::int16_t>(ny),
                           static_cast<std::int16_t>(nz), 1, 1, 1, 1};
    std::memcpy(hdr.data() + 40, dim, sizeof(dim));
    const std::int16_t datatype = 2, bitpix = 8;
    std::memcpy(hdr.data() + 70, &datatype, 2);
    std::memcpy(hdr.data() + 72, &bitpix, 2);
    const float vox_offset = 352.0f;
    std::memcpy(hdr.data() + 108, &vox_offset, 4);
    std::memcpy(hdr.data() + 344, "n+1", 4);
    std::ofstream out(root / "vol.nii", std::ios::binary);
    out.write(hdr.data(), 348);
    const char ext[4] = {0, 0, 0, 0};
    out.write(ext, 4);
    out.write(reinterpret_cast<const char*>(vox.data()), static_cast<std::streamsize>(vox.size()));
  }

  SimulateOptions opt;
  opt.config = tiny_config();
  opt.out_dir = root / "ds";
  opt.volumes = {root / "vol.nii"};
  opt.window_lo = 2;
  opt.window_hi = 5;
  opt.regime = Regime::InD;
  opt.data_seed = 3;
  const RunManifest m = cmd_simulate(opt);
  CHECK(m.meta.at("count") == "3");
  CHECK(m.meta.at("height") == "256");
  const SlicePair pair = read_pair(pair_paths(root / "ds", 0));
  CHECK(pair.hf.rows() == 256);
  CHECK(pair.hf.data.maxCoeff() == doctest::Approx(1.0f));
  CHECK(pair.input.rows() == 256);
}

TEST_CASE("KIQT_DATA_DIR resolves relative paths") {
  const auto root = temp_root("envroot");
  setenv("KIQT_DATA_DIR", root.c_str(), 1);
  CHECK(resolve_data_path("x/y") == root / "x/y");
  CHECK(resolve_data_path("/abs/path") == fs::path("/abs/path"));
  unsetenv("KIQT_DATA_DIR");
  CHECK(resolve_data_path("x/y") == fs::path("x/y"));
}

TEST_CASE("CLI binary: simulate and report subcommands run end to end") {
  const auto root = temp_root("cli");
  const std::string cli = KIQT_CLI_PATH;

  save_experiment_config(tiny_config(), root / "exp.cfg");
  const std::string sim_cmd = cli + " simulate --config " + (root / "exp.cfg").string() + " --phantom 4 --size 32 --regime ood --seed 9 --out " +
                              (root / "ds").string() + " > " + (root / "sim.log").string() + " 2>&1";
  REQUIRE(std::system(sim_cmd.c_str()) == 0);
  CHECK(dataset_pair_count(root / "ds") == 4);
  const std::string log = file_text(root / "sim.log");
  CHECK(log.find("manifest hash") != std::string::npos);

  // Unknown flag fails fast.
  const std::string bad_cmd = cli + " simulate --bogus 2> /dev/null";
  CHECK(std::system(bad_cmd.c_str()) != 0);
}
