#include "csr/synthetic.hpp"

#include <cmath>
#include <vector>

#include "csr/rng.hpp"

namespace csr {

namespace {

// Smooth lattice noise: uniform values on a coarse grid, cosine-eased
// bilinear interpolation in between.
std::vector<double> value_noise(int size, int cell, Rng& rng) {
  const int lattice = size / cell + 2;
  std::vector<double> nodes(static_cast<std::size_t>(lattice) * lattice);
  for (double& v : nodes) v = rng.uniform(-1.0, 1.0);

  auto ease = [](double t) { return 0.5 - 0.5 * std::cos(3.14159265358979323846 * t); };

  std::vector<double> out(static_cast<std::size_t>(size) * size);
  for (int y = 0; y < size; ++y) {
    const int cy = y / cell;
    const double ty = ease(static_cast<double>(y % cell) / cell);
    for (int x = 0; x < size; ++x) {
      const int cx = x / cell;
      const double tx = ease(static_cast<double>(x % cell) / cell);
      const double n00 = nodes[static_cast<std::size_t>(cy) * lattice + cx];
      const double n01 = nodes[static_cast<std::size_t>(cy) * lattice + cx + 1];
      const double n10 = nodes[static_cast<std::size_t>(cy + 1) * lattice + cx];
      const double n11 =
          nodes[static_cast<std::size_t>(cy + 1) * lattice + cx + 1];
      const double top = n00 * (1.0 - tx) + n01 * tx;
      const double bottom = n10 * (1.0 - tx) + n11 * tx;
      out[static_cast<std::size_t>(y) * size + x] = top * (1.0 - ty) + bottom * ty;
    }
  }
  return out;
}

}  // namespace

Grid synthetic_texture(int size, std::uint64_t seed, int variant) {
  Rng rng(seed);
  std::vector<double> field(static_cast<std::size_t>(size) * size, 0.0);

  // Octaves from roughly half the image down to 3-pixel cells keep energy at
  // the frequencies a 4x downsample destroys, so reconstruction is nontrivial.
  double amplitude = 1.0;
  for (int cell = size / 2; cell >= 3; cell /= 2) {
    const std::vector<double> octave = value_noise(size, cell, rng);
    if (variant % 4 == 1) {
      for (std::size_t i = 0; i < field.size(); ++i)
        field[i] += amplitude * std::abs(octave[i]);  // turbulence
    } else {
      for (std::size_t i = 0; i < field.size(); ++i)
        field[i] += amplitude * octave[i];
    }
    amplitude *= 0.55;
  }

  switch (variant % 4) {
    case 2:  // ridged: sharp creases from folded noise
      for (double& v : field) v = 1.0 - 2.0 * std::abs(v);
      break;
    case 3: {  // banded: sine-warped stripes give long coherent edges
      const double angle = rng.uniform(0.0, 3.14159265358979323846);
      const double freq = rng.uniform(0.05, 0.12);
      const double warp = rng.uniform(2.0, 5.0);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
          double& v = field[static_cast<std::size_t>(y) * size + x];
          const double phase =
              freq * (std::cos(angle) * x + std::sin(angle) * y);
          v = std::sin(6.283185307179586 * phase + warp * v);
        }
      break;
    }
    default:
      break;
  }

  double lo = field[0], hi = field[0];
  for (double v : field) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  const double span = hi > lo ? hi - lo : 1.0;

  Grid g(size, size, 1);
  for (std::size_t i = 0; i < field.size(); ++i)
    g.data[i] = 255.0 * (field[i] - lo) / span;
  return g;
}

std::vector<Grid> synthetic_corpus(int count, int size, std::uint64_t seed) {
  std::vector<Grid> corpus;
  corpus.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    corpus.push_back(
        synthetic_texture(size, mix_seed(seed, static_cast<std::uint64_t>(i)),
                          i % 4));
  return corpus;
}

}  // namespace csr
