#pragma once

#include "kiqt/masks.hpp"
#include "kiqt/training.hpp"
#include "kiqt/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace kiqt {

enum class Split { Train, Test };

/// Subject-level bookkeeping for volume-based datasets.
struct DatasetManifest {
  std::vector<std::string> subject_ids;
  Split split = Split::Train;
  int slices_per_subject = 1;
  std::uint64_t seed = 0;

  std::size_t slice_count() const { return subject_ids.size() * static_cast<std::size_t>(slices_per_subject); }
};

/// Seeded shuffle, then the first train_count subjects go to TRAIN and the
/// next test_count to TEST; the sets are disjoint by construction.
std::pair<DatasetManifest, DatasetManifest> make_manifest(const std::vector<std::string>& subject_ids,
                                                          int train_count, int test_count,
                                                          int slices_per_subject, std::uint64_t seed);

/// One simulated acquisition: undersampled low-field k-space input, fully
/// sampled high-field k-space target, and the matching magnitude images
/// (lf is also the zero-filled low-field baseline).
struct SlicePair {
  ComplexSlice input;
  ComplexSlice target;
  MagnitudeSlice lf;
  MagnitudeSlice hf;
};

/// File layout of one pair inside a dataset directory.
struct PairPaths {
  std::filesystem::path input, target, lf, hf;
};

PairPaths pair_paths(const std::filesystem::path& dataset_dir, int index);

void write_pair(const SlicePair& pair, const PairPaths& paths);
SlicePair read_pair(const PairPaths& paths);

/// Number of pairs recorded in the dataset manifest.
int dataset_pair_count(const std::filesystem::path& dataset_dir);

/// Loads the whole dataset in the representation a model trains on:
/// k-space mode pairs (input kspace -> target kspace) or spatial mode
/// (lf magnitude -> hf magnitude).
TrainData load_train_data(const std::filesystem::path& dataset_dir, IqtDomain domain);

}  // namespace kiqt
