#pragma once

#include <filesystem>
#include <vector>

#include "dynrf/dataset.hpp"
#include "dynrf/fields.hpp"
#include "dynrf/grid.hpp"

namespace dynrf::metrics {

// 10*log10(max_val^2 / MSE) over all channels; +inf for identical images.
double psnr(const Image& a, const Image& b, double max_val);

// Mean local SSIM on ITU-R 601 luma, 11x11 gaussian window (sigma 1.5),
// C1 = 0.01^2, C2 = 0.03^2 on the [0,1] range. Window centers are restricted
// to the valid interior; images must be at least 11x11.
double ssim(const Image& a, const Image& b);

struct FrameMetrics {
  int index = 0;
  double psnr = 0;
  double ssim = 0;
};

struct MetricReport {
  std::vector<FrameMetrics> frames;
  double mean_psnr = 0;
  double mean_ssim = 0;
};

// Renders frames deterministically at m samples per ray and scores them
// against the dataset images. stride > 1 evaluates every stride-th frame.
MetricReport evaluate(const fields::FieldModel& model, const data::Dataset& dataset, int m,
                      int threads = 0, int stride = 1);

// Tab-separated table: per-frame rows and a mean row with columns
// PSNR (up), SSIM (up), LPIPS (down). LPIPS is reported as n/a.
void write_report(const MetricReport& report, const std::filesystem::path& path);
std::string format_report(const MetricReport& report);

}  // namespace dynrf::metrics
