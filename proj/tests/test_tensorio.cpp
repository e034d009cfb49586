#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kiqt/config.hpp"
#include "kiqt/dataset.hpp"
#include "kiqt/io.hpp"
#include "kiqt/nifti.hpp"
#include "kiqt/rng.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

namespace fs = std::filesystem;
using namespace kiqt;

namespace {

fs::path temp_dir() {
  const auto dir = fs::temp_directory_path() / "kiqt_test_tensorio";
  fs::create_directories(dir);
  return dir;
}

Plane random_plane(Index h, Index w, Rng& rng, float lo = -1.0f, float hi = 1.0f) {
  Plane p(h, w);
  for (Index i = 0; i < p.size(); ++i) p.data()[i] = static_cast<float>(rng.uniform(lo, hi));
  return p;
}

/// Minimal NIfTI-1 writer used only to exercise the ingestion adapter.
void write_test_nifti(const fs::path& path, Index nx, Index ny, Index nz,
                      const std::vector<std::uint8_t>& voxels) {
  std::vector<char> hdr(348, 0);
  const std::int32_t sizeof_hdr = 348;
  std::memcpy(hdr.data(), &sizeof_hdr, 4);
  std::int16_t dim[8] = {3, static_cast<std::int16_t>(nx), static_cast<std::int16_t>(ny),
                         static_cast<std::int16_t>(nz), 1, 1, 1, 1};
  std::memcpy(hdr.data() + 40, dim, sizeof(dim));
  const std::int16_t datatype = 2, bitpix = 8;  // uint8
  std::memcpy(hdr.data() + 70, &datatype, 2);
  std::memcpy(hdr.data() + 72, &bitpix, 2);
  const float vox_offset = 352.0f;
  std::memcpy(hdr.data() + 108, &vox_offset, 4);
  std::memcpy(hdr.data() + 344, "n+1", 4);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(hdr.data(), 348);
  const char ext[4] = {0, 0, 0, 0};
  out.write(ext, 4);
  out.write(reinterpret_cast<const char*>(voxels.data()), static_cast<std::streamsize>(voxels.size()));
}

}  // namespace

TEST_CASE("KIQT header and payload sizes") {
  const auto dir = temp_dir();

  MagnitudeSlice zero8;
  zero8.data = Plane::Zero(8, 8);
  zero8.scale = 1.0;
  write_slice(zero8, dir / "zero8.kiqt");
  CHECK(fs::file_size(dir / "zero8.kiqt") == kSliceHeaderBytes + 256);  // 8*8*4 payload

  Rng rng(7);
  ComplexSlice k16;
  k16.real = random_plane(16, 16, rng);
  k16.imag = random_plane(16, 16, rng);
  k16.domain = Domain::KSpace;
  k16.scale = 2.5;
  write_slice(k16, dir / "k16.kiqt");
  CHECK(fs::file_size(dir / "k16.kiqt") == kSliceHeaderBytes + 2048);  // 2*16*16*4 payload
}

TEST_CASE("KIQT round trip is bit-exact over random shapes") {
  const auto dir = temp_dir();
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Index h = 8 * (1 + static_cast<Index>(rng.uniform_index(6)));
    const Index w = 8 * (1 + static_cast<Index>(rng.uniform_index(6)));
    if (rng.uniform() < 0.5) {
      ComplexSlice s;
      s.real = random_plane(h, w, rng);
      s.imag = random_plane(h, w, rng);
      s.domain = rng.uniform() < 0.5 ? Domain::Image : Domain::KSpace;
      s.scale = rng.uniform(0.1, 10.0);
      write_slice(s, dir / "rt.kiqt");
      const ComplexSlice back = read_complex_slice(dir / "rt.kiqt");
      CHECK(std::memcmp(back.real.data(), s.real.data(), sizeof(float) * s.real.size()) == 0);
      CHECK(std::memcmp(back.imag.data(), s.imag.data(), sizeof(float) * s.imag.size()) == 0);
      CHECK(back.domain == s.domain);
      CHECK(back.scale == s.scale);
    } else {
      MagnitudeSlice s;
      s.data = random_plane(h, w, rng, 0.0f, 1.0f);
      s.scale = rng.uniform(0.1, 10.0);
      write_slice(s, dir / "rt.kiqt");
      const MagnitudeSlice back = read_magnitude_slice(dir / "rt.kiqt");
      CHECK(std::memcmp(back.data.data(), s.data.data(), sizeof(float) * s.data.size()) == 0);
      CHECK(back.scale == s.scale);
    }
  }
}

TEST_CASE("KIQT format errors name the offending field") {
  const auto dir = temp_dir();
  MagnitudeSlice s;
  s.data = Plane::Ones(16, 16);
  write_slice(s, dir / "good.kiqt");

  std::vector<char> bytes;
  {
    std::ifstream in(dir / "good.kiqt", std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

  auto write_bytes = [&](const fs::path& p, const std::vector<char>& b) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(b.data(), static_cast<std::streamsize>(b.size()));
  };

  auto corrupted = bytes;
  std::memcpy(corrupted.data(), "XXXX", 4);
  write_bytes(dir / "badmagic.kiqt", corrupted);
  CHECK_THROWS_WITH_AS(read_slice(dir / "badmagic.kiqt"), doctest::Contains("magic"), FormatError);

  corrupted = bytes;
  corrupted[4] = 9;
  write_bytes(dir / "badver.kiqt", corrupted);
  CHECK_THROWS_WITH_AS(read_slice(dir / "badver.kiqt"), doctest::Contains("version"), FormatError);

  auto truncated = bytes;
  truncated.resize(kSliceHeaderBytes + 100);  // header says 16x16
  write_bytes(dir / "trunc.kiqt", truncated);
  CHECK_THROWS_WITH_AS(read_slice(dir / "trunc.kiqt"), doctest::Contains("truncated"), FormatError);

  CHECK_THROWS_AS(write_slice(s, dir / "no_such_dir" / "x.kiqt"), IoError);
}

TEST_CASE("volume ingestion crops, pads and normalizes") {
  const auto dir = temp_dir();

  // Larger than 256 in-plane: center crop. Small depth keeps the file light.
  {
    const Index nx = 260, ny = 311, nz = 6;
    std::vector<std::uint8_t> vox(static_cast<std::size_t>(nx * ny * nz));
    Rng rng(3);
    for (auto& v : vox) v = static_cast<std::uint8_t>(rng.uniform_index(256));
    write_test_nifti(dir / "big.nii", nx, ny, nz, vox);

    const auto slices = ingest_volume(dir / "big.nii", 1, 5);
    REQUIRE(slices.size() == 4);
    for (const auto& s : slices) {
      CHECK(s.rows() == 256);
      CHECK(s.cols() == 256);
      CHECK(s.data.maxCoeff() <= 1.0f + 1e-6f);
      CHECK(s.data.minCoeff() >= 0.0f);
    }
    CHECK_THROWS_AS(ingest_volume(dir / "big.nii", 2, 9), ConfigError);  // window out of bounds
  }

  // Smaller than 256: zero pad, content centered.
  {
    const Index nx = 64, ny = 80, nz = 3;
    std::vector<std::uint8_t> vox(static_cast<std::size_t>(nx * ny * nz), 200);
    write_test_nifti(dir / "small.nii", nx, ny, nz, vox);
    const auto slices = ingest_volume(dir / "small.nii", 0, 3);
    REQUIRE(slices.size() == 3);
    const auto& s = slices[0];
    CHECK(s.rows() == 256);
    CHECK(s.cols() == 256);
    CHECK(s.data(128, 128) == doctest::Approx(1.0f));   // interior: constant 200 -> normalized 1
    CHECK(s.data(0, 0) == 0.0f);                        // padding ring
    CHECK(s.data((256 - 80) / 2 - 1, 128) == 0.0f);     // just outside the padded block
    CHECK(s.data((256 - 80) / 2, 128) == doctest::Approx(1.0f));
  }

  // Constant-zero volume: all-zero slices with scale 1.
  {
    std::vector<std::uint8_t> vox(32 * 32 * 2, 0);
    write_test_nifti(dir / "zero.nii", 32, 32, 2, vox);
    const auto slices = ingest_volume(dir / "zero.nii", 0, 2);
    for (const auto& s : slices) {
      CHECK(s.data.maxCoeff() == 0.0f);
      CHECK(s.scale == 1.0);
    }
  }
}

TEST_CASE("crop_or_pad arithmetic matches the canonical 260x311 case") {
  Plane in(260, 311);
  for (Index i = 0; i < in.rows(); ++i)
    for (Index j = 0; j < in.cols(); ++j) in(i, j) = static_cast<float>(i * 1000 + j);
  const Plane out = crop_or_pad(in, 256, 256);
  CHECK(out.rows() == 256);
  CHECK(out.cols() == 256);
  // src offsets: (260-256)/2 = 2, (311-256)/2 = 27
  CHECK(out(0, 0) == in(2, 27));
  CHECK(out(255, 255) == in(257, 282));
}

TEST_CASE("make_manifest: deterministic disjoint split with the full-scale subject counts") {
  std::vector<std::string> ids;
  for (int i = 0; i < 50; ++i) ids.push_back("subj" + std::to_string(i));

  const auto [train, test] = make_manifest(ids, 40, 10, 100, 1234);
  CHECK(train.slice_count() == 4000);
  CHECK(test.slice_count() == 1000);  // 10 subjects x 100 candidate slices
  CHECK(train.subject_ids.size() == 40);
  CHECK(test.subject_ids.size() == 10);

  std::set<std::string> train_set(train.subject_ids.begin(), train.subject_ids.end());
  for (const auto& id : test.subject_ids) CHECK(train_set.count(id) == 0);

  const auto [train2, test2] = make_manifest(ids, 40, 10, 100, 1234);
  CHECK(train2.subject_ids == train.subject_ids);
  CHECK(test2.subject_ids == test.subject_ids);

  const auto [train3, test3] = make_manifest(ids, 40, 10, 100, 99);
  CHECK(train3.subject_ids != train.subject_ids);

  CHECK_THROWS_AS(make_manifest(ids, 45, 10, 100, 1), ConfigError);
}

TEST_CASE("experiment config round trip with the exact key set") {
  const auto dir = temp_dir();
  ExperimentConfig cfg;
  cfg.mask_pattern = MaskPattern::Cartesian;
  cfg.sampling_fraction = 0.3;
  cfg.iqt_domain = IqtDomain::Spatial;
  cfg.folds = 3;
  cfg.epochs = 17;
  cfg.batch_size = 8;
  cfg.learning_rate = 1e-3;
  cfg.weight_decay = 1e-6;
  cfg.seed = 424242;
  save_experiment_config(cfg, dir / "exp.cfg");

  const auto kv = read_key_values(dir / "exp.cfg");
  const std::set<std::string> want{"mask_pattern",  "sampling_fraction", "iqt_domain",
                                   "folds",         "epochs",            "batch_size",
                                   "learning_rate", "weight_decay",      "seed"};
  std::set<std::string> have;
  for (const auto& [k, v] : kv) have.insert(k);
  CHECK(have == want);

  const auto back = load_experiment_config(dir / "exp.cfg");
  CHECK(back.mask_pattern == cfg.mask_pattern);
  CHECK(back.sampling_fraction == doctest::Approx(cfg.sampling_fraction));
  CHECK(back.iqt_domain == cfg.iqt_domain);
  CHECK(back.folds == cfg.folds);
  CHECK(back.epochs == cfg.epochs);
  CHECK(back.batch_size == cfg.batch_size);
  CHECK(back.learning_rate == doctest::Approx(cfg.learning_rate));
  CHECK(back.weight_decay == doctest::Approx(cfg.weight_decay));
  CHECK(back.seed == cfg.seed);
  CHECK(config_hash(back) == config_hash(cfg));

  ExperimentConfig other = cfg;
  other.epochs += 1;
  CHECK(config_hash(other) != config_hash(cfg));
}
