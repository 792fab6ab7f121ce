#include "csr/resample.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "csr/errors.hpp"

namespace csr {

Grid downsample_avg(const Grid& g, int factor) {
  if (factor < 1) throw ShapeMismatch("downsample_avg: factor must be >= 1");
  if (g.height % factor != 0 || g.width % factor != 0)
    throw ShapeMismatch("downsample_avg: dims " + std::to_string(g.height) +
                        "x" + std::to_string(g.width) +
                        " not divisible by factor " + std::to_string(factor));
  Grid out(g.height / factor, g.width / factor, g.channels);
  out.normalized = g.normalized;
  resample_detail::downsample_avg_raw(g.data.data(), g.height, g.width,
                                      g.channels, factor, out.data.data());
  return out;
}

Grid upsample_nearest(const Grid& g, int factor) {
  if (factor < 1) throw ShapeMismatch("upsample_nearest: factor must be >= 1");
  Grid out(g.height * factor, g.width * factor, g.channels);
  out.normalized = g.normalized;
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < g.channels; ++c)
        out.at(y, x, c) = g.at(y / factor, x / factor, c);
  return out;
}

namespace {

// Half-pixel source coordinates for one axis: index of the lower sample and
// the interpolation weight toward the upper one, edges clamp-extended.
void bilinear_axis(int in_extent, int factor, std::vector<int>& lo,
                   std::vector<double>& frac) {
  const int out_extent = in_extent * factor;
  lo.resize(out_extent);
  frac.resize(out_extent);
  for (int i = 0; i < out_extent; ++i) {
    const double src = (i + 0.5) / factor - 0.5;
    double f = std::floor(src);
    int idx = static_cast<int>(f);
    double t = src - f;
    if (idx < 0) {
      idx = 0;
      t = 0.0;
    } else if (idx >= in_extent - 1) {
      idx = in_extent - 2;
      t = 1.0;
    }
    lo[i] = idx;
    frac[i] = t;
  }
}

}  // namespace

Grid resample(const Grid& g, const ResampleSpec& spec) {
  switch (spec.method) {
    case ResampleMethod::average_down:
      return downsample_avg(g, spec.factor);
    case ResampleMethod::nearest_up:
      return upsample_nearest(g, spec.factor);
    case ResampleMethod::bilinear_up:
      return upsample_bilinear(g, spec.factor);
  }
  throw Error("resample: unknown method");
}

Grid upsample_bilinear(const Grid& g, int factor) {
  if (factor < 1) throw ShapeMismatch("upsample_bilinear: factor must be >= 1");
  if (g.height < 2 || g.width < 2)
    throw TooSmall("upsample_bilinear: input must be at least 2x2");
  std::vector<int> ylo, xlo;
  std::vector<double> yfrac, xfrac;
  bilinear_axis(g.height, factor, ylo, yfrac);
  bilinear_axis(g.width, factor, xlo, xfrac);

  Grid out(g.height * factor, g.width * factor, g.channels);
  out.normalized = g.normalized;
  for (int y = 0; y < out.height; ++y) {
    const int y0 = ylo[y];
    const double ty = yfrac[y];
    for (int x = 0; x < out.width; ++x) {
      const int x0 = xlo[x];
      const double tx = xfrac[x];
      for (int c = 0; c < g.channels; ++c) {
        const double top =
            g.at(y0, x0, c) * (1.0 - tx) + g.at(y0, x0 + 1, c) * tx;
        const double bottom =
            g.at(y0 + 1, x0, c) * (1.0 - tx) + g.at(y0 + 1, x0 + 1, c) * tx;
        out.at(y, x, c) = top * (1.0 - ty) + bottom * ty;
      }
    }
  }
  return out;
}

}  // namespace csr
