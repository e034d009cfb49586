#include "kiqt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace kiqt {
namespace {

static_assert(sizeof(float) == 4);

void write_all(const std::filesystem::path& path, const void* data, std::size_t bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

void save_checkpoint(UNet<float>& net, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto params = net.params();

  std::ostringstream manifest;
  const auto& cfg = net.config();
  manifest << "format = kiqt-checkpoint-1\n";
  manifest << "in_channels = " << cfg.in_channels << "\n";
  manifest << "out_channels = " << cfg.out_channels << "\n";
  manifest << "encoder_channels = " << cfg.encoder_channels[0] << "," << cfg.encoder_channels[1] << ","
           << cfg.encoder_channels[2] << "\n";
  manifest << "bottleneck_channels = " << cfg.bottleneck_channels << "\n";
  manifest << "kernel = " << cfg.kernel << "\n";
  manifest << "pool = " << cfg.pool << "\n";
  manifest << "weight_init_seed = " << net.weight_init_seed() << "\n";

  std::vector<float> blob;
  std::size_t offset = 0;
  for (const auto& p : params) {
    manifest << "tensor = " << p.name << " " << p.rows << " " << p.cols << " " << offset << "\n";
    blob.insert(blob.end(), p.value, p.value + p.size());
    offset += static_cast<std::size_t>(p.size()) * sizeof(float);
  }

  if constexpr (std::endian::native == std::endian::big) {
    for (auto& v : blob) {
      std::uint32_t u;
      std::memcpy(&u, &v, 4);
      u = __builtin_bswap32(u);
      std::memcpy(&v, &u, 4);
    }
  }

  const std::string text = manifest.str();
  write_all(dir / kCheckpointManifestName, text.data(), text.size());
  write_all(dir / kCheckpointWeightsName, blob.data(), blob.size() * sizeof(float));
}

UNet<float> load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / kCheckpointManifestName);
  if (!in) throw IoError("cannot open checkpoint manifest: " + (dir / kCheckpointManifestName).string());

  UNetConfig cfg;
  std::uint64_t seed = 0;
  struct Entry {
    std::string name;
    Index rows, cols;
    std::size_t offset;
  };
  std::vector<Entry> entries;

  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string key, eq;
    if (!(ss >> key >> eq) || eq != "=") continue;
    if (key == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt != "kiqt-checkpoint-1") throw FormatError("unsupported checkpoint format: " + fmt);
    } else if (key == "in_channels") {
      ss >> cfg.in_channels;
    } else if (key == "out_channels") {
      ss >> cfg.out_channels;
    } else if (key == "encoder_channels") {
      std::string list;
      ss >> list;
      std::stringstream ls(list);
      std::string item;
      for (int i = 0; i < 3; ++i) {
        if (!std::getline(ls, item, ',')) throw FormatError("checkpoint: encoder_channels needs 3 values");
        cfg.encoder_channels[static_cast<std::size_t>(i)] = std::stoi(item);
      }
    } else if (key == "bottleneck_channels") {
      ss >> cfg.bottleneck_channels;
    } else if (key == "kernel") {
      ss >> cfg.kernel;
    } else if (key == "pool") {
      ss >> cfg.pool;
    } else if (key == "weight_init_seed") {
      ss >> seed;
    } else if (key == "tensor") {
      Entry e;
      if (!(ss >> e.name >> e.rows >> e.cols >> e.offset))
        throw FormatError("checkpoint: malformed tensor entry: " + line);
      entries.push_back(std::move(e));
    }
  }

  UNet<float> net = UNet<float>::build(cfg, seed);
  auto params = net.params();
  if (params.size() != entries.size())
    throw FormatError("checkpoint: tensor count mismatch (" + std::to_string(entries.size()) + " vs " +
                      std::to_string(params.size()) + ")");

  std::ifstream blob(dir / kCheckpointWeightsName, std::ios::binary);
  if (!blob) throw IoError("cannot open checkpoint weights: " + (dir / kCheckpointWeightsName).string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(blob)), std::istreambuf_iterator<char>());

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    const auto& e = entries[i];
    if (e.name != p.name || e.rows != p.rows || e.cols != p.cols)
      throw FormatError("checkpoint: tensor '" + e.name + "' does not match model layout");
    const std::size_t need = e.offset + static_cast<std::size_t>(p.size()) * sizeof(float);
    if (need > bytes.size())
      throw FormatError("checkpoint: weights blob truncated (need " + std::to_string(need) + " bytes, have " +
                        std::to_string(bytes.size()) + ")");
    std::memcpy(p.value, bytes.data() + e.offset, static_cast<std::size_t>(p.size()) * sizeof(float));
    if constexpr (std::endian::native == std::endian::big) {
      for (Index k = 0; k < p.size(); ++k) {
        std::uint32_t u;
        std::memcpy(&u, p.value + k, 4);
        u = __builtin_bswap32(u);
        std::memcpy(p.value + k, &u, 4);
      }
    }
  }
  return net;
}

}  // namespace kiqt
