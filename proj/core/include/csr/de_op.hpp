#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "csr/de_kernel.hpp"
#include "csr/grid.hpp"

namespace csr {

// Output of the enforcement operator on one block: the corrected samples,
// the mean absolute correction applied, and which branch fired.
struct DEResult {
  std::vector<double> y;
  double correction_l1 = 0.0;
  DeBranch branch = DeBranch::identity;
};

// Corrects one block so its mean equals block.lr exactly (to fp roundoff),
// without leaving [-1, 1] or reordering intensities. Raises OutOfRange when
// a sample or the target is outside [-1, 1].
DEResult de_forward(const Block& block);

// Blockwise enforcement across a whole grid pair, applied independently per
// channel. The result downsamples back to `lr` to fp accuracy.
Grid de_forward_grid(const Grid& hr, const Grid& lr, int factor);

struct BlockVjp {
  std::vector<double> dx;
  double dp = 0.0;
};

// upstream^T times the full Jacobian of de_forward with respect to
// (block samples, target), including the cross terms through the block mean.
BlockVjp de_vjp(const Block& block, std::span<const double> upstream);

// Mean |x - f(x, P)| over every sample of the grid, on the [-1, 1] scale:
// how far enforcement had to move the uncorrected field.
double correction_magnitude(const Grid& hr_pre, const Grid& lr, int factor);

// One entry of the correction table: what enforcement adds to sample i of a
// fixed block as the target sweeps.
struct CorrectionSample {
  double p = 0.0;
  int i = 0;
  double x_i = 0.0;
  double correction = 0.0;
};

std::vector<CorrectionSample> correction_surface(
    std::span<const double> x, std::span<const double> p_samples);

// CSV with header "P,i,x_i,correction", floats at 9 significant digits.
void write_correction_csv(const std::vector<CorrectionSample>& table,
                          std::ostream& out);

}  // namespace csr
