#include "csr/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "csr/errors.hpp"
#include "csr/numeric.hpp"

namespace csr {

double mse(const Grid& a, const Grid& b) {
  if (!a.same_shape(b)) throw ShapeMismatch("mse: shapes differ");
  std::vector<double> sq(a.data.size());
  for (std::size_t i = 0; i < sq.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    sq[i] = d * d;
  }
  return pairwise_mean(sq.data(), sq.size());
}

Grid rgb_to_y(const Grid& g) {
  if (g.channels != 3)
    throw ChannelMismatch("rgb_to_y: expected 3 channels, got " +
                          std::to_string(g.channels));
  Grid y(g.height, g.width, 1);
  for (int r = 0; r < g.height; ++r)
    for (int c = 0; c < g.width; ++c)
      y.at(r, c, 0) = 16.0 + (65.481 * g.at(r, c, 0) + 128.553 * g.at(r, c, 1) +
                              24.966 * g.at(r, c, 2)) /
                                 255.0;
  return y;
}

namespace {

Grid to_luma(const Grid& g) {
  if (g.channels == 1) return g;
  return rgb_to_y(g);
}

}  // namespace

double psnr_y(const Grid& pred, const Grid& truth) {
  if (!pred.same_shape(truth)) throw ShapeMismatch("psnr_y: shapes differ");
  const double err = mse(to_luma(pred), to_luma(truth));
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / err);
}

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

std::vector<double> gaussian_window() {
  std::vector<double> w(kWindow);
  double total = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - (kWindow - 1) / 2.0;
    w[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

// Separable valid-mode Gaussian filter: rows then columns.
std::vector<double> filter_valid(const std::vector<double>& img, int h, int w,
                                 const std::vector<double>& kernel) {
  const int ow = w - kWindow + 1;
  const int oh = h - kWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k)
        acc += kernel[k] * img[static_cast<std::size_t>(y) * w + x + k];
      rows[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k)
        acc += kernel[k] * rows[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace

double ssim(const Grid& pred, const Grid& truth) {
  if (!pred.same_shape(truth)) throw ShapeMismatch("ssim: shapes differ");
  if (pred.channels != 1)
    throw ChannelMismatch("ssim: expected 1 channel, got " +
                          std::to_string(pred.channels));
  if (pred.height < kWindow || pred.width < kWindow)
    throw TooSmall("ssim: input smaller than the 11x11 window");

  const int h = pred.height, w = pred.width;
  const std::size_t n = pred.data.size();
  std::vector<double> xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    xx[i] = pred.data[i] * pred.data[i];
    yy[i] = truth.data[i] * truth.data[i];
    xy[i] = pred.data[i] * truth.data[i];
  }

  const std::vector<double> kernel = gaussian_window();
  const std::vector<double> mu1 = filter_valid(pred.data, h, w, kernel);
  const std::vector<double> mu2 = filter_valid(truth.data, h, w, kernel);
  const std::vector<double> sxx = filter_valid(xx, h, w, kernel);
  const std::vector<double> syy = filter_valid(yy, h, w, kernel);
  const std::vector<double> sxy = filter_valid(xy, h, w, kernel);

  std::vector<double> local(mu1.size());
  for (std::size_t i = 0; i < mu1.size(); ++i) {
    const double m1 = mu1[i], m2 = mu2[i];
    const double var1 = sxx[i] - m1 * m1;
    const double var2 = syy[i] - m2 * m2;
    const double cov = sxy[i] - m1 * m2;
    // Denominators written as numerator + a gap that is exactly zero for
    // identical inputs, so ssim(a, a) is exactly 1 no matter how the
    // compiler contracts the arithmetic.
    const double luma = 2.0 * m1 * m2 + kC1;
    const double structure = 2.0 * cov + kC2;
    const double mu_gap = (m1 - m2) * (m1 - m2);
    const double var_gap = var1 + var2 - 2.0 * cov;
    local[i] =
        (luma * structure) / ((mu_gap + luma) * (var_gap + structure));
  }
  return pairwise_mean(local.data(), local.size());
}

bool MetricReport::psnr_infinite() const { return std::isinf(psnr_db); }

MetricReport evaluate_pair(const Grid& pred, const Grid& truth) {
  if (!pred.same_shape(truth))
    throw ShapeMismatch("evaluate_pair: shapes differ");
  MetricReport report;
  report.mse = mse(pred, truth);
  report.psnr_db = psnr_y(pred, truth);
  report.ssim = ssim(to_luma(pred), to_luma(truth));
  report.n_pixels = static_cast<long>(pred.data.size());
  return report;
}

}  // namespace csr
