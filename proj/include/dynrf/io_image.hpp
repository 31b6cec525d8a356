#pragma once

#include <filesystem>

#include "dynrf/grid.hpp"

namespace dynrf::io {

// 8-bit RGB PNG. Values are clamped to [0,1] and rounded on write; reads
// return v/255.
Image load_png_rgb(const std::filesystem::path& path);
void save_png_rgb(const Image& image, const std::filesystem::path& path);

// 8-bit single-channel PNG; any nonzero sample maps to 1.
GridU8 load_png_mask(const std::filesystem::path& path);
void save_png_mask(const GridU8& mask, const std::filesystem::path& path);

// Grayscale portable float map ("Pf", 32-bit little-endian floats, scale
// -1.0, rows bottom-up). Values round-trip bit exactly at float precision;
// loaded grids hold the widened floats.
GridD load_pfm(const std::filesystem::path& path);
void save_pfm(const GridD& grid, const std::filesystem::path& path);

// Rounds every entry to the nearest float; grids that pass through save_pfm
// must be snapped first if bit-exact round trips are required.
void snap_to_float(GridD& grid);

}  // namespace dynrf::io
