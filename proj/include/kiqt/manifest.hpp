#pragma once

#include "kiqt/types.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace kiqt {

/// One produced file, tracked relative to the manifest's directory.
struct Artifact {
  std::string relpath;
  std::uint64_t bytes = 0;
  std::string hash_hex;  // FNV-1a 64 of the file contents
};

/// Record of one pipeline step: what went in, what came out, and a
/// content hash over everything except the timestamp, so re-running with
/// the same arguments yields the identical manifest hash.
struct RunManifest {
  std::string kind;  // dataset | train | eval | report
  std::string run_id;
  std::string config_hash;
  std::vector<std::string> inputs;
  std::map<std::string, std::string> meta;
  std::vector<Artifact> artifacts;
  std::string created_at;
};

/// Hashes the file and appends it as an artifact (path stored relative to
/// root).
void add_artifact(RunManifest& manifest, const std::filesystem::path& root, const std::filesystem::path& file);

/// Deterministic content hash; excludes created_at.
std::string manifest_hash(const RunManifest& manifest);

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

/// Confirms every listed artifact exists under root with matching size
/// and hash; throws IoError naming the first offender.
void verify_manifest(const RunManifest& manifest, const std::filesystem::path& root);

std::string timestamp_now();

}  // namespace kiqt
