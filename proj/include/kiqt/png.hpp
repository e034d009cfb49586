#pragma once

#include "kiqt/types.hpp"

#include <filesystem>
#include <vector>

namespace kiqt {

/// Minimal PNG writer (8-bit grayscale or RGB, stored deflate blocks).
void write_png_gray8(const std::vector<std::uint8_t>& pixels, Index width, Index height,
                     const std::filesystem::path& path);
void write_png_rgb8(const std::vector<std::uint8_t>& pixels, Index width, Index height,
                    const std::filesystem::path& path);

enum class Colormap {
  Gray,  // anatomy
  Hot,   // sequential black-red-yellow-white, for error/uncertainty maps
};

/// Renders a grid of equally sized planes into one PNG with thin
/// separators and a vertical colorbar (vmax at the top). Values are
/// clipped to [vmin, vmax].
void write_panel_png(const std::vector<std::vector<Plane>>& grid, double vmin, double vmax, Colormap cmap,
                     const std::filesystem::path& path);

}  // namespace kiqt
