#include "csr/de_op.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "csr/errors.hpp"
#include "csr/resample.hpp"

namespace csr {

namespace {

void check_unit_range(std::span<const double> x, double p) {
  for (double v : x)
    if (!(v >= -1.0 && v <= 1.0))
      throw OutOfRange("enforcement: block sample " + std::to_string(v) +
                       " outside [-1,1]");
  if (!(p >= -1.0 && p <= 1.0))
    throw OutOfRange("enforcement: target " + std::to_string(p) +
                     " outside [-1,1]");
}

void check_grid_pair(const Grid& hr, const Grid& lr, int factor) {
  if (factor < 1) throw ShapeMismatch("enforcement: factor must be >= 1");
  if (hr.channels != lr.channels)
    throw ShapeMismatch("enforcement: channel counts differ");
  if (hr.height != lr.height * factor || hr.width != lr.width * factor)
    throw ShapeMismatch("enforcement: HR dims are not factor x LR dims");
  if (!hr.normalized || !lr.normalized)
    throw NotNormalized("enforcement: both grids must be normalized");
}

}  // namespace

DEResult de_forward(const Block& block) {
  check_unit_range(block.hr, block.lr);
  DEResult result;
  result.y.resize(block.hr.size());
  result.branch = de_kernel::apply(block.hr.data(), block.hr.size(),
                                   block.lr, result.y.data());
  std::vector<double> diff(block.hr.size());
  for (std::size_t i = 0; i < diff.size(); ++i)
    diff[i] = std::abs(result.y[i] - block.hr[i]);
  result.correction_l1 = pairwise_mean(diff.data(), diff.size());
  return result;
}

Grid de_forward_grid(const Grid& hr, const Grid& lr, int factor) {
  check_grid_pair(hr, lr, factor);
  Grid out = hr;
  const std::size_t m = static_cast<std::size_t>(factor) * factor;
  std::vector<double> block(m), corrected(m);
  for (int ly = 0; ly < lr.height; ++ly) {
    for (int lx = 0; lx < lr.width; ++lx) {
      for (int c = 0; c < lr.channels; ++c) {
        std::size_t k = 0;
        for (int dy = 0; dy < factor; ++dy)
          for (int dx = 0; dx < factor; ++dx)
            block[k++] = hr.at(ly * factor + dy, lx * factor + dx, c);
        check_unit_range(block, lr.at(ly, lx, c));
        de_kernel::apply(block.data(), m, lr.at(ly, lx, c), corrected.data());
        k = 0;
        for (int dy = 0; dy < factor; ++dy)
          for (int dx = 0; dx < factor; ++dx)
            out.at(ly * factor + dy, lx * factor + dx, c) = corrected[k++];
      }
    }
  }
  return out;
}

BlockVjp de_vjp(const Block& block, std::span<const double> upstream) {
  if (upstream.size() != block.hr.size())
    throw ShapeMismatch("de_vjp: cotangent size must match the block");
  BlockVjp grads;
  grads.dx.resize(block.hr.size());
  de_kernel::vjp(block.hr.data(), block.hr.size(), block.lr, upstream.data(),
                 grads.dx.data(), grads.dp);
  return grads;
}

double correction_magnitude(const Grid& hr_pre, const Grid& lr, int factor) {
  check_grid_pair(hr_pre, lr, factor);
  const Grid corrected = de_forward_grid(hr_pre, lr, factor);
  std::vector<double> diff(hr_pre.data.size());
  for (std::size_t i = 0; i < diff.size(); ++i)
    diff[i] = std::abs(corrected.data[i] - hr_pre.data[i]);
  return pairwise_mean(diff.data(), diff.size());
}

std::vector<CorrectionSample> correction_surface(
    std::span<const double> x, std::span<const double> p_samples) {
  std::vector<CorrectionSample> table;
  table.reserve(x.size() * p_samples.size());
  std::vector<double> corrected(x.size());
  for (double p : p_samples) {
    check_unit_range(x, p);
    de_kernel::apply(x.data(), x.size(), p, corrected.data());
    for (std::size_t i = 0; i < x.size(); ++i) {
      CorrectionSample sample;
      sample.p = p;
      sample.i = static_cast<int>(i);
      sample.x_i = x[i];
      sample.correction = corrected[i] - x[i];
      table.push_back(sample);
    }
  }
  return table;
}

void write_correction_csv(const std::vector<CorrectionSample>& table,
                          std::ostream& out) {
  out << "P,i,x_i,correction\n";
  char line[128];
  for (const CorrectionSample& s : table) {
    std::snprintf(line, sizeof(line), "%.9g,%d,%.9g,%.9g\n", s.p, s.i, s.x_i,
                  s.correction);
    out << line;
  }
}

}  // namespace csr
