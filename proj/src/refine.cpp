#include "dynrf/refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace dynrf::refine {

namespace {

void check_shapes(const GridD& a, const GridD& b, const Mask& mask) {
  if (!a.same_shape(b) || a.width != mask.width || a.height != mask.height)
    throw std::invalid_argument("refine: grid dimensions disagree");
}

bool in_region(uint8_t mask_value, Region region) {
  if (mask_value > 1) throw std::invalid_argument("refine: mask values must be 0 or 1");
  return (mask_value == 1) == (region == Region::Foreground);
}

// Region pixels ordered by (residual, row-major index); the top
// ceil(alpha * N) of this order are the replacement set.
std::vector<std::pair<double, size_t>> sorted_region(const GridD& residual, const Mask& mask,
                                                     Region region) {
  std::vector<std::pair<double, size_t>> entries;
  for (size_t i = 0; i < residual.size(); ++i)
    if (in_region(mask.data[i], region)) entries.emplace_back(residual.data[i], i);
  std::sort(entries.begin(), entries.end());
  return entries;
}

size_t select_count(size_t region_size, double alpha) {
  return size_t(std::ceil(alpha * double(region_size)));
}

}  // namespace

ResidualMap residual_map(const GridD& pred, const GridD& ref, const Mask& mask, Region region) {
  check_shapes(pred, ref, mask);
  ResidualMap out;
  out.region = region;
  out.grid = GridD(pred.width, pred.height, 0.0);
  for (size_t i = 0; i < pred.size(); ++i)
    if (in_region(mask.data[i], region)) out.grid.data[i] = std::abs(pred.data[i] - ref.data[i]);
  return out;
}

double quantile_threshold(const ResidualMap& residuals, const Mask& mask, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("quantile_threshold: alpha outside [0,1]");
  if (residuals.grid.width != mask.width || residuals.grid.height != mask.height)
    throw std::invalid_argument("quantile_threshold: dimensions disagree");
  auto entries = sorted_region(residuals.grid, mask, residuals.region);
  if (entries.empty())
    throw std::invalid_argument("quantile_threshold: region is empty, nothing to refine");
  const size_t k = select_count(entries.size(), alpha);
  if (k == 0) return std::numeric_limits<double>::infinity();
  return entries[entries.size() - k].first;
}

RefineResult refine_depth(const GridD& ref, const GridD& pred, const Mask& mask, double alpha) {
  check_shapes(pred, ref, mask);
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("refine_depth: alpha outside [0,1]");

  RefineResult result;
  result.refined = ref;
  for (Region region : {Region::Foreground, Region::Background}) {
    GridD residual(ref.width, ref.height, 0.0);
    for (size_t i = 0; i < ref.size(); ++i) residual.data[i] = std::abs(pred.data[i] - ref.data[i]);
    auto entries = sorted_region(residual, mask, region);
    if (entries.empty()) continue;
    const size_t k = select_count(entries.size(), alpha);
    for (size_t j = entries.size() - k; j < entries.size(); ++j)
      result.refined.data[entries[j].second] = pred.data[entries[j].second];
    if (region == Region::Foreground)
      result.replaced_fg = int(k);
    else
      result.replaced_bg = int(k);
  }
  return result;
}

Mask box_to_mask(int u0, int v0, int u1, int v1, int width, int height) {
  if (u0 > u1 || v0 > v1) throw std::invalid_argument("box_to_mask: degenerate box");
  if (u1 < 0 || v1 < 0 || u0 >= width || v0 >= height)
    throw std::invalid_argument("box_to_mask: box does not intersect the image");
  Mask mask(width, height, 0);
  const int x0 = std::max(u0, 0), x1 = std::min(u1, width - 1);
  const int y0 = std::max(v0, 0), y1 = std::min(v1, height - 1);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) mask.at(x, y) = 1;
  return mask;
}

}  // namespace dynrf::refine
