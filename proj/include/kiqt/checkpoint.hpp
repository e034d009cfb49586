#pragma once

#include "kiqt/unet.hpp"

#include <filesystem>

namespace kiqt {

/// Weight checkpoints: `manifest.txt` describing the architecture plus
/// per-tensor (name, shape, byte offset) entries, and `weights.bin`, one
/// little-endian 32-bit float payload blob. Round trips bit-exactly for
/// float models.
void save_checkpoint(UNet<float>& net, const std::filesystem::path& dir);
UNet<float> load_checkpoint(const std::filesystem::path& dir);

inline constexpr const char* kCheckpointManifestName = "manifest.txt";
inline constexpr const char* kCheckpointWeightsName = "weights.bin";

}  // namespace kiqt
