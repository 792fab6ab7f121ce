#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "csr/grid.hpp"

namespace csr {

// Overlapping chip decomposition of an LR grid. Origins advance by `stride`;
// the final row/column origin is clamped so edge chips stay in bounds, which
// means edge chips may overlap their neighbours by more than chip - stride.
struct TileSet {
  int chip = 0;    // chip edge length, LR pixels
  int stride = 0;  // origin spacing, LR pixels
  int source_height = 0;
  int source_width = 0;
  std::vector<std::pair<int, int>> origins;  // (row, col)
};

TileSet tile(const Grid& g, int chip, int stride);

// Cuts the idx-th chip out of the source grid.
Grid chip_at(const Grid& g, const TileSet& tiles, std::size_t idx);

// The region scored during evaluation, in LR pixels: the union of all chip
// center crops (chip/2 x chip/2, offset chip/4 into each chip).
struct ScoredRegion {
  int row0 = 0;
  int col0 = 0;
  int height = 0;
  int width = 0;
};

ScoredRegion scored_region(const TileSet& tiles);

// Rebuilds the scored HR region from per-chip model outputs (each
// N*chip x N*chip). Chips are written in order; on the regular interior each
// scored pixel is produced by exactly one chip. Raises CoverageGap if any
// scored pixel is never written.
Grid assemble_centers(const TileSet& tiles, const std::vector<Grid>& outputs,
                      int factor);

}  // namespace csr
