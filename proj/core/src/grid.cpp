#include "csr/grid.hpp"

#include <string>

#include "csr/errors.hpp"

namespace csr {

namespace {

// Sensor files routinely overshoot their nominal range by rounding noise;
// within this slack we clamp, beyond it the data is considered broken.
constexpr double kRangeSlack = 1e-9;

}  // namespace

Grid normalize(const Grid& g, double lo, double hi) {
  if (!(hi > lo))
    throw DegenerateRange("normalize: hi (" + std::to_string(hi) +
                          ") must exceed lo (" + std::to_string(lo) + ")");
  const double span = hi - lo;
  Grid out = g;
  out.normalized = true;
  for (std::size_t i = 0; i < g.data.size(); ++i) {
    const double v = g.data[i];
    if (v < lo - kRangeSlack || v > hi + kRangeSlack)
      throw OutOfRange("normalize: sample " + std::to_string(v) +
                       " outside [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "]");
    double y = 2.0 * (v - lo) / span - 1.0;
    if (y > 1.0) y = 1.0;
    if (y < -1.0) y = -1.0;
    out.data[i] = y;
  }
  return out;
}

Grid denormalize(const Grid& g, double lo, double hi) {
  if (!(hi > lo))
    throw DegenerateRange("denormalize: hi must exceed lo");
  if (!g.normalized)
    throw NotNormalized("denormalize: grid is not flagged normalized");
  Grid out = g;
  out.normalized = false;
  for (std::size_t i = 0; i < g.data.size(); ++i)
    out.data[i] = (g.data[i] + 1.0) * 0.5 * (hi - lo) + lo;
  return out;
}

Grid crop(const Grid& g, int row0, int col0, int h, int w) {
  if (row0 < 0 || col0 < 0 || h <= 0 || w <= 0 || row0 + h > g.height ||
      col0 + w > g.width)
    throw ShapeMismatch("crop: window leaves the grid");
  Grid out(h, w, g.channels);
  out.normalized = g.normalized;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < g.channels; ++c)
        out.at(y, x, c) = g.at(row0 + y, col0 + x, c);
  return out;
}

std::vector<Block> extract_blocks(const Grid& hr, const Grid& lr, int factor) {
  if (factor < 1) throw ShapeMismatch("extract_blocks: factor must be >= 1");
  if (hr.channels != lr.channels)
    throw ShapeMismatch("extract_blocks: channel counts differ");
  if (hr.height != lr.height * factor || hr.width != lr.width * factor)
    throw ShapeMismatch("extract_blocks: HR dims are not factor x LR dims");
  if (!hr.normalized || !lr.normalized)
    throw NotNormalized("extract_blocks: both grids must be normalized");

  std::vector<Block> blocks;
  blocks.reserve(static_cast<std::size_t>(lr.height) * lr.width * lr.channels);
  for (int ly = 0; ly < lr.height; ++ly) {
    for (int lx = 0; lx < lr.width; ++lx) {
      for (int c = 0; c < lr.channels; ++c) {
        Block b;
        b.lr = lr.at(ly, lx, c);
        b.hr.resize(static_cast<std::size_t>(factor) * factor);
        std::size_t k = 0;
        for (int dy = 0; dy < factor; ++dy)
          for (int dx = 0; dx < factor; ++dx)
            b.hr[k++] = hr.at(ly * factor + dy, lx * factor + dx, c);
        blocks.push_back(std::move(b));
      }
    }
  }
  return blocks;
}

}  // namespace csr
