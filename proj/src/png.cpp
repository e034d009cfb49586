#include "kiqt/png.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

namespace kiqt {
namespace {

std::uint32_t crc32(const std::uint8_t* data, std::size_t n, std::uint32_t crc = 0) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  crc ^= 0xffffffffu;
  for (std::size_t i = 0; i < n; ++i) crc = table[(crc ^ data[i]) & 0xffu] ^ (crc >> 8);
  return crc ^ 0xffffffffu;
}

std::uint32_t adler32(const std::uint8_t* data, std::size_t n) {
  std::uint32_t a = 1, b = 0;
  for (std::size_t i = 0; i < n; ++i) {
    a = (a + data[i]) % 65521u;
    b = (b + a) % 65521u;
  }
  return (b << 16) | a;
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(std::vector<std::uint8_t>& out, const char type[4], const std::vector<std::uint8_t>& payload) {
  put_be32(out, static_cast<std::uint32_t>(payload.size()));
  std::vector<std::uint8_t> body(type, type + 4);
  body.insert(body.end(), payload.begin(), payload.end());
  out.insert(out.end(), body.begin(), body.end());
  put_be32(out, crc32(body.data(), body.size()));
}

/// zlib stream with stored (uncompressed) deflate blocks.
std::vector<std::uint8_t> zlib_store(const std::vector<std::uint8_t>& raw) {
  std::vector<std::uint8_t> z{0x78, 0x01};
  std::size_t at = 0;
  do {
    const std::size_t block = std::min<std::size_t>(raw.size() - at, 65535);
    const bool final = at + block == raw.size();
    z.push_back(final ? 1 : 0);
    z.push_back(static_cast<std::uint8_t>(block & 0xff));
    z.push_back(static_cast<std::uint8_t>(block >> 8));
    z.push_back(static_cast<std::uint8_t>(~block & 0xff));
    z.push_back(static_cast<std::uint8_t>((~block >> 8) & 0xff));
    z.insert(z.end(), raw.begin() + static_cast<std::ptrdiff_t>(at),
             raw.begin() + static_cast<std::ptrdiff_t>(at + block));
    at += block;
  } while (at < raw.size());
  put_be32(z, adler32(raw.data(), raw.size()));
  return z;
}

void write_png(const std::vector<std::uint8_t>& pixels, Index width, Index height, int channels,
               const std::filesystem::path& path) {
  if (width <= 0 || height <= 0) throw ShapeError("png: empty image");
  if (pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
                           static_cast<std::size_t>(channels))
    throw ShapeError("png: pixel buffer size mismatch");

  std::vector<std::uint8_t> out{0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};

  std::vector<std::uint8_t> ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(width));
  put_be32(ihdr, static_cast<std::uint32_t>(height));
  ihdr.push_back(8);                                  // bit depth
  ihdr.push_back(channels == 1 ? 0 : 2);              // color type
  ihdr.insert(ihdr.end(), {0, 0, 0});                 // compression, filter, interlace
  put_chunk(out, "IHDR", ihdr);

  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(height) * (1 + static_cast<std::size_t>(width) * channels));
  const std::size_t stride = static_cast<std::size_t>(width) * channels;
  for (Index y = 0; y < height; ++y) {
    raw.push_back(0);  // filter: none
    raw.insert(raw.end(), pixels.begin() + static_cast<std::ptrdiff_t>(y * stride),
               pixels.begin() + static_cast<std::ptrdiff_t>((y + 1) * stride));
  }
  put_chunk(out, "IDAT", zlib_store(raw));
  put_chunk(out, "IEND", {});

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open for writing: " + path.string());
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("write failed: " + path.string());
}

std::array<std::uint8_t, 3> map_color(double t, Colormap cmap) {
  t = std::clamp(t, 0.0, 1.0);
  if (cmap == Colormap::Gray) {
    const auto g = static_cast<std::uint8_t>(std::lround(t * 255.0));
    return {g, g, g};
  }
  const auto band = [](double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
  return {band(3.0 * t), band(3.0 * t - 1.0), band(3.0 * t - 2.0)};
}

}  // namespace

void write_png_gray8(const std::vector<std::uint8_t>& pixels, Index width, Index height,
                     const std::filesystem::path& path) {
  write_png(pixels, width, height, 1, path);
}

void write_png_rgb8(const std::vector<std::uint8_t>& pixels, Index width, Index height,
                    const std::filesystem::path& path) {
  write_png(pixels, width, height, 3, path);
}

void write_panel_png(const std::vector<std::vector<Plane>>& grid, double vmin, double vmax, Colormap cmap,
                     const std::filesystem::path& path) {
  if (grid.empty() || grid[0].empty()) throw ShapeError("panel: empty grid");
  const Index th = grid[0][0].rows(), tw = grid[0][0].cols();
  const std::size_t n_rows = grid.size(), n_cols = grid[0].size();
  for (const auto& row : grid) {
    if (row.size() != n_cols) throw ShapeError("panel: ragged grid");
    for (const auto& tile : row)
      if (tile.rows() != th || tile.cols() != tw) throw ShapeError("panel: tile size mismatch");
  }
  const double range = vmax > vmin ? vmax - vmin : 1.0;

  constexpr Index gap = 2, bar_w = 16, bar_gap = 6;
  const Index height = static_cast<Index>(n_rows) * th + (static_cast<Index>(n_rows) - 1) * gap;
  const Index width = static_cast<Index>(n_cols) * tw + (static_cast<Index>(n_cols) - 1) * gap + bar_gap + bar_w;

  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3, 255);
  auto put = [&](Index y, Index x, const std::array<std::uint8_t, 3>& rgb) {
    const std::size_t at = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                            static_cast<std::size_t>(x)) * 3;
    pixels[at] = rgb[0];
    pixels[at + 1] = rgb[1];
    pixels[at + 2] = rgb[2];
  };

  for (std::size_t r = 0; r < n_rows; ++r)
    for (std::size_t c = 0; c < n_cols; ++c) {
      const Index y0 = static_cast<Index>(r) * (th + gap);
      const Index x0 = static_cast<Index>(c) * (tw + gap);
      const Plane& tile = grid[r][c];
      for (Index i = 0; i < th; ++i)
        for (Index j = 0; j < tw; ++j)
          put(y0 + i, x0 + j, map_color((static_cast<double>(tile(i, j)) - vmin) / range, cmap));
    }

  // Colorbar: vmax at the top.
  const Index bar_x = width - bar_w;
  for (Index i = 0; i < height; ++i) {
    const double t = 1.0 - static_cast<double>(i) / static_cast<double>(height - 1);
    for (Index j = 0; j < bar_w; ++j) put(i, bar_x + j, map_color(t, cmap));
  }

  write_png_rgb8(pixels, width, height, path);
}

}  // namespace kiqt
