#pragma once

#include "csr/grid.hpp"
#include "csr/numeric.hpp"

namespace csr {

// 2D-average downsampling: each output sample is the mean of its N x N
// source block, per channel, with a fixed in-block reduction order. Raises
// ShapeMismatch unless both dims divide by the factor.
Grid downsample_avg(const Grid& g, int factor);

// Replicates each sample into an N x N block. Exact inverse of
// downsample_avg for any factor.
Grid upsample_nearest(const Grid& g, int factor);

// Separable bilinear interpolation with half-pixel (area-centered) sample
// alignment and clamp-extended edges. Raises TooSmall below 2 x 2.
Grid upsample_bilinear(const Grid& g, int factor);

enum class ResampleMethod { average_down, nearest_up, bilinear_up };

struct ResampleSpec {
  int factor = 1;
  ResampleMethod method = ResampleMethod::average_down;
};

Grid resample(const Grid& g, const ResampleSpec& spec);

namespace resample_detail {

// Raw typed kernel shared by the Grid API and the model's tensors.
template <typename T>
void downsample_avg_raw(const T* in, int h, int w, int c, int factor, T* out) {
  const int oh = h / factor, ow = w / factor;
  const int m = factor * factor;
  std::vector<T> block(static_cast<std::size_t>(m));
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      for (int ch = 0; ch < c; ++ch) {
        // Constant blocks short-circuit so nearest-neighbour round trips are
        // bit-exact for every factor, not just powers of two.
        const T first =
            in[(static_cast<std::size_t>(oy) * factor * w + ox * factor) * c + ch];
        bool constant = true;
        int k = 0;
        for (int dy = 0; dy < factor; ++dy) {
          const std::size_t row =
              (static_cast<std::size_t>(oy) * factor + dy) * w;
          for (int dx = 0; dx < factor; ++dx, ++k) {
            const T v = in[(row + ox * factor + dx) * c + ch];
            block[static_cast<std::size_t>(k)] = v;
            constant = constant && v == first;
          }
        }
        out[(static_cast<std::size_t>(oy) * ow + ox) * c + ch] =
            constant ? first : pairwise_mean(block.data(), block.size());
      }
    }
  }
}

// Transpose of downsample_avg as a linear map: spreads each LR value divided
// by N^2 uniformly over its block. Used by the dual-resolution loss gradient.
template <typename T>
void downsample_avg_transpose_raw(const T* in, int oh, int ow, int c,
                                  int factor, T* out) {
  const T scale = T(1) / static_cast<T>(factor * factor);
  const int w = ow * factor;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      for (int ch = 0; ch < c; ++ch) {
        const T v = in[(static_cast<std::size_t>(oy) * ow + ox) * c + ch] * scale;
        for (int dy = 0; dy < factor; ++dy) {
          const std::size_t row =
              (static_cast<std::size_t>(oy) * factor + dy) * w;
          for (int dx = 0; dx < factor; ++dx)
            out[(row + ox * factor + dx) * c + ch] = v;
        }
      }
    }
  }
}

}  // namespace resample_detail
}  // namespace csr
