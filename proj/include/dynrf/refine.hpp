#pragma once

#include "dynrf/grid.hpp"

namespace dynrf::refine {

// Binary tool mask: 1 = foreground tool, 0 = background tissue.
using Mask = GridU8;

enum class Region { Foreground, Background };

// |pred - ref| restricted to one region; zero on the region's complement.
struct ResidualMap {
  GridD grid;
  Region region = Region::Background;
};

ResidualMap residual_map(const GridD& pred, const GridD& ref, const Mask& mask, Region region);

// Smallest residual among the ceil(alpha * N) region pixels with the largest
// residuals (ties broken by row-major pixel index, later index wins).
// alpha = 0 selects nothing and returns +inf. Throws when the region is empty.
double quantile_threshold(const ResidualMap& residuals, const Mask& mask, double alpha);

struct RefineResult {
  GridD refined;
  int replaced_fg = 0;
  int replaced_bg = 0;
};

// For each region independently, replaces the reference depth of the
// ceil(alpha * N_region) pixels with the largest |pred - ref| by the
// predicted depth. Every other pixel is left untouched.
RefineResult refine_depth(const GridD& ref, const GridD& pred, const Mask& mask, double alpha);

// Rectangle-prompt fallback: ones inside the (inclusive-corner) box clipped
// to the image, zeros elsewhere. The box must intersect the image.
Mask box_to_mask(int u0, int v0, int u1, int v1, int width, int height);

}  // namespace dynrf::refine
