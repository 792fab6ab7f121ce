#pragma once

#include <cstddef>
#include <vector>

namespace csr {

// Dense 2D multi-channel raster. Samples are stored row-major with
// interleaved channels (y, x, c). `normalized` marks data that has been
// affinely mapped onto [-1, 1]; the conservation operators require it.
struct Grid {
  int height = 0;
  int width = 0;
  int channels = 1;
  bool normalized = false;
  std::vector<double> data;

  Grid() = default;
  Grid(int h, int w, int c, double fill = 0.0)
      : height(h),
        width(w),
        channels(c),
        data(static_cast<std::size_t>(h) * w * c, fill) {}

  std::size_t sample_count() const { return data.size(); }

  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  double& at(int y, int x, int c) { return data[index(y, x, c)]; }
  double at(int y, int x, int c) const { return data[index(y, x, c)]; }

  bool same_shape(const Grid& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

// Affine map of [lo, hi] onto [-1, 1]. Samples up to 1e-9 outside the range
// are clamped; anything further out raises OutOfRange. Raises DegenerateRange
// when hi <= lo.
Grid normalize(const Grid& g, double lo, double hi);

// Inverse of normalize. Raises NotNormalized when the flag is missing.
Grid denormalize(const Grid& g, double lo, double hi);

// Copies a rectangular window. Raises ShapeMismatch when it leaves the grid.
Grid crop(const Grid& g, int row0, int col0, int h, int w);

// The N x N group of HR samples tied to the single LR sample they must
// average back to. `hr` is row-major within the block.
struct Block {
  std::vector<double> hr;
  double lr = 0.0;
};

// Splits an HR/LR grid pair into per-(LR pixel, channel) blocks. Iteration is
// row-major over LR pixels with channels innermost. Every HR sample lands in
// exactly one block.
std::vector<Block> extract_blocks(const Grid& hr, const Grid& lr, int factor);

}  // namespace csr
