#pragma once

#include "kiqt/types.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <variant>

namespace kiqt {

/// KIQT binary slice container, little-endian throughout:
///   "KIQT" | u16 version=1 | u8 domain (0=IMAGE,1=KSPACE,2=MAGNITUDE) |
///   u8 channels (1|2) | u32 H | u32 W | f64 scale | f32 payload,
/// payload row-major, real plane before imaginary plane.
inline constexpr std::size_t kSliceHeaderBytes = 24;

using AnySlice = std::variant<ComplexSlice, MagnitudeSlice>;

void write_slice(const ComplexSlice& slice, const std::filesystem::path& path);
void write_slice(const MagnitudeSlice& slice, const std::filesystem::path& path);

/// Reads either slice kind back; bit-exact round trip with write_slice.
/// Throws FormatError naming the offending header field.
AnySlice read_slice(const std::filesystem::path& path);

ComplexSlice read_complex_slice(const std::filesystem::path& path);
MagnitudeSlice read_magnitude_slice(const std::filesystem::path& path);

/// Single binary plane in the same container (channel count 1, domain tag
/// as given); used for sampling masks and uncertainty maps.
void write_plane(const Plane& plane, Domain domain, double scale, const std::filesystem::path& path);
Plane read_plane(const std::filesystem::path& path);

/// Flat "key = value" text files (experiment configs, manifests, priors).
/// Later duplicate keys win; '#' starts a comment.
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);
void write_key_values(const std::map<std::string, std::string>& kv, const std::filesystem::path& path);

}  // namespace kiqt
