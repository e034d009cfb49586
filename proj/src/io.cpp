#include "kiqt/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

namespace kiqt {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big,
              "mixed-endian platforms unsupported");

template <typename T>
void put_le(std::vector<std::uint8_t>& buf, T value) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(raw[sizeof(T) - 1 - i]);
  } else {
    buf.insert(buf.end(), raw, raw + sizeof(T));
  }
}

template <typename T>
T get_le(const std::uint8_t* p) {
  std::uint8_t raw[sizeof(T)];
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T); ++i) raw[i] = p[sizeof(T) - 1 - i];
  } else {
    std::memcpy(raw, p, sizeof(T));
  }
  T value;
  std::memcpy(&value, raw, sizeof(T));
  return value;
}

void append_plane(std::vector<std::uint8_t>& buf, const Plane& plane) {
  const auto* data = plane.data();  // row-major, contiguous
  const std::size_t n = static_cast<std::size_t>(plane.size());
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < n; ++i) put_le(buf, data[i]);
  } else {
    const std::size_t at = buf.size();
    buf.resize(at + n * sizeof(float));
    std::memcpy(buf.data() + at, data, n * sizeof(float));
  }
}

void write_raw(Domain domain, std::uint8_t channels, const Plane& real, const Plane* imag, double scale,
               const std::filesystem::path& path) {
  std::vector<std::uint8_t> buf;
  buf.reserve(kSliceHeaderBytes + sizeof(float) * channels * static_cast<std::size_t>(real.size()));
  buf.insert(buf.end(), {'K', 'I', 'Q', 'T'});
  put_le<std::uint16_t>(buf, 1);
  buf.push_back(static_cast<std::uint8_t>(domain));
  buf.push_back(channels);
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(real.rows()));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(real.cols()));
  put_le<double>(buf, scale);
  append_plane(buf, real);
  if (channels == 2) append_plane(buf, *imag);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

struct RawSlice {
  Domain domain;
  std::uint8_t channels;
  double scale;
  Plane real, imag;
};

RawSlice read_raw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (buf.size() < kSliceHeaderBytes) throw FormatError("truncated header: " + path.string());
  if (std::memcmp(buf.data(), "KIQT", 4) != 0) throw FormatError("bad magic (expected KIQT): " + path.string());
  const auto version = get_le<std::uint16_t>(buf.data() + 4);
  if (version != 1) throw FormatError("unsupported version " + std::to_string(version) + ": " + path.string());
  const auto domain_tag = buf[6];
  if (domain_tag > 2) throw FormatError("bad domain tag " + std::to_string(domain_tag) + ": " + path.string());
  const auto channels = buf[7];
  if (channels != 1 && channels != 2)
    throw FormatError("bad channel count " + std::to_string(channels) + ": " + path.string());
  const auto h = get_le<std::uint32_t>(buf.data() + 8);
  const auto w = get_le<std::uint32_t>(buf.data() + 12);
  if (h == 0 || w == 0) throw FormatError("bad dimensions " + std::to_string(h) + "x" + std::to_string(w));
  const double scale = get_le<double>(buf.data() + 16);
  if (!(scale > 0.0) || !std::isfinite(scale)) throw FormatError("bad scale field: " + path.string());

  const std::size_t plane_bytes = sizeof(float) * static_cast<std::size_t>(h) * w;
  const std::size_t expected = kSliceHeaderBytes + plane_bytes * channels;
  if (buf.size() != expected)
    throw FormatError("payload truncated or oversized: expected " + std::to_string(expected) + " bytes, got " +
                      std::to_string(buf.size()) + ": " + path.string());

  RawSlice raw;
  raw.domain = static_cast<Domain>(domain_tag);
  raw.channels = channels;
  raw.scale = scale;
  auto load_plane = [&](std::size_t offset) {
    Plane p(h, w);
    if constexpr (std::endian::native == std::endian::big) {
      for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i)
        p.data()[i] = get_le<float>(buf.data() + offset + i * sizeof(float));
    } else {
      std::memcpy(p.data(), buf.data() + offset, plane_bytes);
    }
    return p;
  };
  raw.real = load_plane(kSliceHeaderBytes);
  if (channels == 2) raw.imag = load_plane(kSliceHeaderBytes + plane_bytes);
  return raw;
}

}  // namespace

void write_slice(const ComplexSlice& slice, const std::filesystem::path& path) {
  validate(slice);
  write_raw(slice.domain, 2, slice.real, &slice.imag, slice.scale, path);
}

void write_slice(const MagnitudeSlice& slice, const std::filesystem::path& path) {
  validate(slice);
  write_raw(Domain::Magnitude, 1, slice.data, nullptr, slice.scale, path);
}

AnySlice read_slice(const std::filesystem::path& path) {
  RawSlice raw = read_raw(path);
  if (raw.channels == 2) {
    if (raw.domain == Domain::Magnitude)
      throw FormatError("domain tag MAGNITUDE invalid for 2-channel slice: " + path.string());
    ComplexSlice s;
    s.real = std::move(raw.real);
    s.imag = std::move(raw.imag);
    s.domain = raw.domain;
    s.scale = raw.scale;
    return s;
  }
  if (raw.domain == Domain::Image)
    throw FormatError("domain tag IMAGE invalid for 1-channel slice: " + path.string());
  MagnitudeSlice s;
  s.data = std::move(raw.real);
  s.scale = raw.scale;
  return s;
}

ComplexSlice read_complex_slice(const std::filesystem::path& path) {
  AnySlice any = read_slice(path);
  if (auto* c = std::get_if<ComplexSlice>(&any)) return std::move(*c);
  throw FormatError("expected 2-channel complex slice: " + path.string());
}

MagnitudeSlice read_magnitude_slice(const std::filesystem::path& path) {
  AnySlice any = read_slice(path);
  if (auto* m = std::get_if<MagnitudeSlice>(&any)) return std::move(*m);
  throw FormatError("expected 1-channel magnitude slice: " + path.string());
}

void write_plane(const Plane& plane, Domain domain, double scale, const std::filesystem::path& path) {
  write_raw(domain, 1, plane, nullptr, scale, path);
}

Plane read_plane(const std::filesystem::path& path) {
  RawSlice raw = read_raw(path);
  if (raw.channels != 1) throw FormatError("expected 1-channel plane: " + path.string());
  return std::move(raw.real);
}

namespace {
std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}
}  // namespace

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = trim(line.substr(0, eq));
    if (!key.empty()) kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

void write_key_values(const std::map<std::string, std::string>& kv, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace kiqt
