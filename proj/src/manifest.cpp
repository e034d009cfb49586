#include "kiqt/manifest.hpp"

#include "kiqt/hash.hpp"
#include "kiqt/io.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

namespace kiqt {

std::string timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void add_artifact(RunManifest& manifest, const std::filesystem::path& root, const std::filesystem::path& file) {
  Artifact a;
  a.relpath = std::filesystem::relative(file, root).generic_string();
  a.bytes = static_cast<std::uint64_t>(std::filesystem::file_size(file));
  a.hash_hex = to_hex(fnv1a64_file(file));
  manifest.artifacts.push_back(std::move(a));
}

namespace {

std::string canonical_content(const RunManifest& m) {
  std::ostringstream out;
  out << "kind = " << m.kind << "\n";
  out << "run_id = " << m.run_id << "\n";
  out << "config_hash = " << m.config_hash << "\n";
  for (const auto& in : m.inputs) out << "input = " << in << "\n";
  for (const auto& [k, v] : m.meta) out << "meta." << k << " = " << v << "\n";
  for (const auto& a : m.artifacts) out << "artifact = " << a.relpath << " " << a.bytes << " " << a.hash_hex << "\n";
  return out.str();
}

}  // namespace

std::string manifest_hash(const RunManifest& manifest) { return to_hex(fnv1a64(canonical_content(manifest))); }

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << canonical_content(manifest);
  out << "created_at = " << manifest.created_at << "\n";
  out << "manifest_hash = " << manifest_hash(manifest) << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  RunManifest m;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 3);
    if (key == "kind") {
      m.kind = value;
    } else if (key == "run_id") {
      m.run_id = value;
    } else if (key == "config_hash") {
      m.config_hash = value;
    } else if (key == "input") {
      m.inputs.push_back(value);
    } else if (key == "created_at") {
      m.created_at = value;
    } else if (key == "artifact") {
      std::istringstream ss(value);
      Artifact a;
      if (!(ss >> a.relpath >> a.bytes >> a.hash_hex)) throw FormatError("malformed artifact line: " + line);
      m.artifacts.push_back(std::move(a));
    } else if (key.rfind("meta.", 0) == 0) {
      m.meta[key.substr(5)] = value;
    }
  }
  return m;
}

void verify_manifest(const RunManifest& manifest, const std::filesystem::path& root) {
  for (const auto& a : manifest.artifacts) {
    const auto path = root / a.relpath;
    if (!std::filesystem::exists(path)) throw IoError("manifest artifact missing: " + path.string());
    const auto bytes = static_cast<std::uint64_t>(std::filesystem::file_size(path));
    if (bytes != a.bytes)
      throw IoError("manifest artifact size mismatch for " + a.relpath + ": expected " +
                    std::to_string(a.bytes) + ", got " + std::to_string(bytes));
    const std::string hash = to_hex(fnv1a64_file(path));
    if (hash != a.hash_hex) throw IoError("manifest artifact hash mismatch for " + a.relpath);
  }
}

}  // namespace kiqt
