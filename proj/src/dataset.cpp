#include "kiqt/dataset.hpp"

#include "kiqt/ensemble.hpp"
#include "kiqt/io.hpp"
#include "kiqt/rng.hpp"

#include <cstdio>

namespace kiqt {

std::pair<DatasetManifest, DatasetManifest> make_manifest(const std::vector<std::string>& subject_ids,
                                                          int train_count, int test_count,
                                                          int slices_per_subject, std::uint64_t seed) {
  if (train_count < 0 || test_count < 0 || slices_per_subject < 1)
    throw ConfigError("make_manifest: counts must be nonnegative, slices_per_subject positive");
  if (static_cast<std::size_t>(train_count) + static_cast<std::size_t>(test_count) > subject_ids.size())
    throw ConfigError("make_manifest: insufficient subjects (" + std::to_string(subject_ids.size()) +
                      " for " + std::to_string(train_count) + "+" + std::to_string(test_count) + ")");

  std::vector<std::string> shuffled = subject_ids;
  Rng rng(derive_seed(seed, 0x3A2F));
  rng.shuffle(shuffled.begin(), shuffled.end());

  DatasetManifest train, test;
  train.split = Split::Train;
  test.split = Split::Test;
  train.slices_per_subject = test.slices_per_subject = slices_per_subject;
  train.seed = test.seed = seed;
  train.subject_ids.assign(shuffled.begin(), shuffled.begin() + train_count);
  test.subject_ids.assign(shuffled.begin() + train_count, shuffled.begin() + train_count + test_count);
  return {std::move(train), std::move(test)};
}

PairPaths pair_paths(const std::filesystem::path& dataset_dir, int index) {
  char stem[32];
  std::snprintf(stem, sizeof(stem), "pair_%04d", index);
  const auto base = dataset_dir / "slices" / stem;
  PairPaths p;
  p.input = base.string() + ".input.kiqt";
  p.target = base.string() + ".target.kiqt";
  p.lf = base.string() + ".lf.kiqt";
  p.hf = base.string() + ".hf.kiqt";
  return p;
}

void write_pair(const SlicePair& pair, const PairPaths& paths) {
  write_slice(pair.input, paths.input);
  write_slice(pair.target, paths.target);
  write_slice(pair.lf, paths.lf);
  write_slice(pair.hf, paths.hf);
}

SlicePair read_pair(const PairPaths& paths) {
  SlicePair pair;
  pair.input = read_complex_slice(paths.input);
  pair.target = read_complex_slice(paths.target);
  pair.lf = read_magnitude_slice(paths.lf);
  pair.hf = read_magnitude_slice(paths.hf);
  return pair;
}

int dataset_pair_count(const std::filesystem::path& dataset_dir) {
  const auto kv = read_key_values(dataset_dir / "dataset_manifest.txt");
  const auto it = kv.find("meta.count");
  if (it == kv.end())
    throw FormatError("dataset manifest missing meta.count: " + dataset_dir.string());
  return std::stoi(it->second);
}

TrainData load_train_data(const std::filesystem::path& dataset_dir, IqtDomain domain) {
  const int count = dataset_pair_count(dataset_dir);
  TrainData data;
  data.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const auto paths = pair_paths(dataset_dir, i);
    TrainSample sample;
    if (domain == IqtDomain::KSpace) {
      sample.input = to_feature_map(read_complex_slice(paths.input));
      sample.target = to_feature_map(read_complex_slice(paths.target));
    } else {
      sample.input = to_feature_map(read_magnitude_slice(paths.lf));
      sample.target = to_feature_map(read_magnitude_slice(paths.hf));
    }
    data.push_back(std::move(sample));
  }
  return data;
}

}  // namespace kiqt
