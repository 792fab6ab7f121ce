#pragma once

#include "csr/grid.hpp"

namespace csr {

// Mean squared difference over all samples. Raises ShapeMismatch.
double mse(const Grid& a, const Grid& b);

// BT.601 studio-range luma: Y = 16 + (65.481 R + 128.553 G + 24.966 B) / 255.
// Expects a 3-channel grid with samples on the [0, 255] scale.
Grid rgb_to_y(const Grid& g);

// PSNR in dB against a 255 peak, computed on the luma channel (3-channel
// input) or directly on the samples (1-channel input). Identical inputs give
// +infinity, never a sentinel.
double psnr_y(const Grid& pred, const Grid& truth);

// Mean local SSIM over an 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
// K2 = 0.03, L = 255, valid-region windowing. Single-channel input on the
// [0, 255] scale; raises TooSmall below 11 pixels per side.
double ssim(const Grid& pred, const Grid& truth);

struct MetricReport {
  double mse = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  long n_pixels = 0;

  bool psnr_infinite() const;
};

// All three metrics for a prediction/truth pair on the [0, 255] scale.
// 3-channel pairs are scored on luma for PSNR and SSIM.
MetricReport evaluate_pair(const Grid& pred, const Grid& truth);

}  // namespace csr
