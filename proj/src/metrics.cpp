#include "dynrf/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "dynrf/render.hpp"

namespace dynrf::metrics {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

GridD luma(const Image& img) {
  GridD out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double* p = img.px(x, y);
      out.at(x, y) = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    }
  return out;
}

}  // namespace

double psnr(const Image& a, const Image& b, double max_val) {
  if (!a.same_shape(b)) throw std::invalid_argument("psnr: image dimensions disagree");
  if (!(max_val > 0.0)) throw std::invalid_argument("psnr: max_val must be positive");
  double sum = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    sum += d * d;
  }
  const double mse = sum / double(a.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_val * max_val / mse);
}

double ssim(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("ssim: image dimensions disagree");
  if (a.width < kWindow || a.height < kWindow)
    throw std::invalid_argument("ssim: image smaller than the 11x11 window");

  const GridD ya = luma(a);
  const GridD yb = luma(b);

  double kernel[kWindow][kWindow];
  {
    double total = 0.0;
    const int r = kWindow / 2;
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) {
        const double g = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
        kernel[dy + r][dx + r] = g;
        total += g;
      }
    for (auto& row : kernel)
      for (double& v : row) v /= total;
  }

  const int r = kWindow / 2;
  double sum = 0.0;
  int count = 0;
  for (int y = r; y < a.height - r; ++y) {
    for (int x = r; x < a.width - r; ++x) {
      double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const double w = kernel[dy + r][dx + r];
          const double va = ya.at(x + dx, y + dy);
          const double vb = yb.at(x + dx, y + dy);
          mu_a += w * va;
          mu_b += w * vb;
          aa += w * (va * va);
          bb += w * (vb * vb);
          ab += w * (va * vb);  // grouped so ssim(a,b) == ssim(b,a) bitwise
        }
      const double var_a = aa - mu_a * mu_a;
      const double var_b = bb - mu_b * mu_b;
      const double cov = ab - mu_a * mu_b;
      const double value = ((2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2)) /
                           ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
      sum += value;
      ++count;
    }
  }
  return sum / double(count);
}

MetricReport evaluate(const fields::FieldModel& model, const data::Dataset& dataset, int m,
                      int threads, int stride) {
  dataset.validate();
  if (stride < 1) throw std::invalid_argument("evaluate: stride must be >= 1");
  MetricReport report;
  double psnr_sum = 0.0, ssim_sum = 0.0;
  for (const data::Frame& frame : dataset.frames) {
    if ((frame.index - 1) % stride != 0) continue;
    Image rendered;
    GridD depth;
    render::render_frame(model, dataset.camera, frame.t, m, /*deterministic=*/true, rendered,
                         depth, threads);
    FrameMetrics fm;
    fm.index = frame.index;
    fm.psnr = psnr(rendered, frame.image, 1.0);
    fm.ssim = ssim(rendered, frame.image);
    psnr_sum += fm.psnr;
    ssim_sum += fm.ssim;
    report.frames.push_back(fm);
  }
  report.mean_psnr = psnr_sum / double(report.frames.size());
  report.mean_ssim = ssim_sum / double(report.frames.size());
  return report;
}

std::string format_report(const MetricReport& report) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(3);
  out << "frame\tPSNR \xE2\x86\x91\tSSIM \xE2\x86\x91\tLPIPS \xE2\x86\x93\n";
  auto row = [&](const std::string& label, double p, double s) {
    out << label << "\t";
    if (std::isinf(p))
      out << "inf";
    else
      out << p;
    out << "\t" << s << "\tn/a\n";
  };
  for (const FrameMetrics& fm : report.frames) {
    char label[16];
    std::snprintf(label, sizeof(label), "%06d", fm.index);
    row(label, fm.psnr, fm.ssim);
  }
  row("mean", report.mean_psnr, report.mean_ssim);
  return out.str();
}

void write_report(const MetricReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("report: cannot write " + path.string());
  out << format_report(report);
}

}  // namespace dynrf::metrics
