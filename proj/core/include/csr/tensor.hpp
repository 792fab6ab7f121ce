#pragma once

#include <cstddef>
#include <vector>

#include "csr/grid.hpp"

namespace csr {

// Typed counterpart of Grid used inside the model: same row-major,
// channel-last layout, float for training and double for gradient checks.
template <typename T>
struct Tensor {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(int h, int w, int c, T fill = T(0))
      : height(h),
        width(w),
        channels(c),
        data(static_cast<std::size_t>(h) * w * c, fill) {}

  std::size_t sample_count() const { return data.size(); }
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  T& at(int y, int x, int c) { return data[index(y, x, c)]; }
  T at(int y, int x, int c) const { return data[index(y, x, c)]; }

  bool same_shape(const Tensor& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

template <typename T>
Tensor<T> tensor_from_grid(const Grid& g) {
  Tensor<T> t(g.height, g.width, g.channels);
  for (std::size_t i = 0; i < g.data.size(); ++i)
    t.data[i] = static_cast<T>(g.data[i]);
  return t;
}

template <typename T>
Grid grid_from_tensor(const Tensor<T>& t, bool normalized) {
  Grid g(t.height, t.width, t.channels);
  g.normalized = normalized;
  for (std::size_t i = 0; i < t.data.size(); ++i)
    g.data[i] = static_cast<double>(t.data[i]);
  return g;
}

}  // namespace csr
