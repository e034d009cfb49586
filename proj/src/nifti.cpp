#include "kiqt/nifti.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace kiqt {
namespace {

// The NIfTI-1 header fields we consume, at their fixed offsets.
constexpr std::size_t kHeaderBytes = 348;
constexpr std::size_t kOffDim = 40;        // int16 dim[8]
constexpr std::size_t kOffDatatype = 70;   // int16
constexpr std::size_t kOffSclSlope = 112;  // float32
constexpr std::size_t kOffSclInter = 116;  // float32
constexpr std::size_t kOffVoxOffset = 108; // float32
constexpr std::size_t kOffMagic = 344;     // char[4]

template <typename T>
T read_field(const std::vector<char>& hdr, std::size_t offset) {
  T v;
  std::memcpy(&v, hdr.data() + offset, sizeof(T));
  return v;
}

template <typename Src>
void convert_voxels(const std::vector<char>& raw, std::size_t count, std::vector<float>& out) {
  out.resize(count);
  const Src* src = reinterpret_cast<const Src*>(raw.data());
  for (std::size_t i = 0; i < count; ++i) out[i] = static_cast<float>(src[i]);
}

}  // namespace

Volume read_nifti_volume(const std::filesystem::path& path) {
  if (path.extension() == ".gz")
    throw IoError("compressed NIfTI not supported, decompress first: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open volume: " + path.string());

  std::vector<char> hdr(kHeaderBytes);
  in.read(hdr.data(), static_cast<std::streamsize>(kHeaderBytes));
  if (!in) throw FormatError("truncated NIfTI header: " + path.string());

  const auto sizeof_hdr = read_field<std::int32_t>(hdr, 0);
  if (sizeof_hdr != 348)
    throw FormatError("not a native-endian NIfTI-1 file (sizeof_hdr = " + std::to_string(sizeof_hdr) + "): " +
                      path.string());
  char magic[4];
  std::memcpy(magic, hdr.data() + kOffMagic, 4);
  if (std::memcmp(magic, "n+1", 4) != 0) {
    if (std::memcmp(magic, "ni1", 4) == 0)
      throw FormatError("detached .hdr/.img NIfTI unsupported: " + path.string());
    throw FormatError("bad NIfTI magic: " + path.string());
  }

  std::int16_t dim[8];
  std::memcpy(dim, hdr.data() + kOffDim, sizeof(dim));
  if (dim[0] < 3) throw FormatError("volume must be 3-D, dim[0] = " + std::to_string(dim[0]));
  for (int d = 4; d <= dim[0] && d < 8; ++d)
    if (dim[d] > 1) throw FormatError("multi-frame NIfTI unsupported (dim[" + std::to_string(d) + "] > 1)");

  Volume vol;
  vol.nx = dim[1];
  vol.ny = dim[2];
  vol.nz = dim[3];
  if (vol.nx <= 0 || vol.ny <= 0 || vol.nz <= 0) throw FormatError("bad NIfTI dimensions: " + path.string());
  const std::size_t count = static_cast<std::size_t>(vol.nx) * static_cast<std::size_t>(vol.ny) *
                            static_cast<std::size_t>(vol.nz);

  const auto datatype = read_field<std::int16_t>(hdr, kOffDatatype);
  std::size_t elem = 0;
  switch (datatype) {
    case 2: elem = 1; break;    // uint8
    case 4: elem = 2; break;    // int16
    case 8: elem = 4; break;    // int32
    case 16: elem = 4; break;   // float32
    case 64: elem = 8; break;   // float64
    case 512: elem = 2; break;  // uint16
    default:
      throw FormatError("unsupported NIfTI datatype " + std::to_string(datatype) + ": " + path.string());
  }

  const auto vox_offset = static_cast<std::streamoff>(read_field<float>(hdr, kOffVoxOffset));
  in.seekg(vox_offset, std::ios::beg);
  std::vector<char> raw(count * elem);
  in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!in) throw FormatError("truncated NIfTI voxel data: " + path.string());

  switch (datatype) {
    case 2: convert_voxels<std::uint8_t>(raw, count, vol.voxels); break;
    case 4: convert_voxels<std::int16_t>(raw, count, vol.voxels); break;
    case 8: convert_voxels<std::int32_t>(raw, count, vol.voxels); break;
    case 16: convert_voxels<float>(raw, count, vol.voxels); break;
    case 64: convert_voxels<double>(raw, count, vol.voxels); break;
    case 512: convert_voxels<std::uint16_t>(raw, count, vol.voxels); break;
    default: break;
  }

  const float slope = read_field<float>(hdr, kOffSclSlope);
  const float inter = read_field<float>(hdr, kOffSclInter);
  if (slope != 0.0f && (slope != 1.0f || inter != 0.0f))
    for (auto& v : vol.voxels) v = slope * v + inter;
  return vol;
}

Plane crop_or_pad(const Plane& in, Index target_h, Index target_w) {
  Plane out = Plane::Zero(target_h, target_w);
  const Index h = in.rows(), w = in.cols();
  const Index copy_h = std::min(h, target_h), copy_w = std::min(w, target_w);
  const Index src_i = (h - copy_h) / 2, src_j = (w - copy_w) / 2;
  const Index dst_i = (target_h - copy_h) / 2, dst_j = (target_w - copy_w) / 2;
  out.block(dst_i, dst_j, copy_h, copy_w) = in.block(src_i, src_j, copy_h, copy_w);
  return out;
}

std::vector<MagnitudeSlice> ingest_volume(const std::filesystem::path& path, Index window_lo, Index window_hi) {
  const Volume vol = read_nifti_volume(path);
  if (window_lo < 0 || window_hi > vol.nz || window_lo >= window_hi)
    throw ConfigError("axial window [" + std::to_string(window_lo) + ", " + std::to_string(window_hi) +
                      ") out of bounds for volume depth " + std::to_string(vol.nz));

  std::vector<MagnitudeSlice> slices;
  slices.reserve(static_cast<std::size_t>(window_hi - window_lo));
  for (Index z = window_lo; z < window_hi; ++z) {
    Plane plane(vol.ny, vol.nx);
    for (Index y = 0; y < vol.ny; ++y)
      for (Index x = 0; x < vol.nx; ++x) plane(y, x) = vol.at(x, y, z);

    MagnitudeSlice slice;
    slice.data = crop_or_pad(plane.cwiseMax(0.0f), kCanonicalSliceSize, kCanonicalSliceSize);
    const float peak = slice.data.maxCoeff();
    if (peak > 0.0f) {
      slice.data /= peak;
      slice.scale = static_cast<double>(peak);
    } else {
      slice.scale = 1.0;  // zero-max slices stay all-zero
    }
    slices.push_back(std::move(slice));
  }
  return slices;
}

}  // namespace kiqt
