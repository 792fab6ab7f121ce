#include "csr/tile.hpp"

#include <string>

#include "csr/errors.hpp"

namespace csr {

namespace {

std::vector<int> axis_origins(int extent, int chip, int stride) {
  std::vector<int> origins;
  const int last = extent - chip;
  int pos = 0;
  while (true) {
    origins.push_back(pos < last ? pos : last);
    if (pos >= last) break;
    pos += stride;
  }
  return origins;
}

}  // namespace

TileSet tile(const Grid& g, int chip, int stride) {
  if (chip > g.height || chip > g.width)
    throw ChipTooLarge("tile: chip " + std::to_string(chip) +
                       " exceeds grid " + std::to_string(g.height) + "x" +
                       std::to_string(g.width));
  if (chip <= 0 || stride <= 0 || stride > chip)
    throw Error("tile: stride must satisfy 0 < stride <= chip");

  TileSet tiles;
  tiles.chip = chip;
  tiles.stride = stride;
  tiles.source_height = g.height;
  tiles.source_width = g.width;
  const auto rows = axis_origins(g.height, chip, stride);
  const auto cols = axis_origins(g.width, chip, stride);
  tiles.origins.reserve(rows.size() * cols.size());
  for (int r : rows)
    for (int c : cols) tiles.origins.emplace_back(r, c);
  return tiles;
}

Grid chip_at(const Grid& g, const TileSet& tiles, std::size_t idx) {
  const auto [r, c] = tiles.origins.at(idx);
  return crop(g, r, c, tiles.chip, tiles.chip);
}

ScoredRegion scored_region(const TileSet& tiles) {
  const int margin = tiles.chip / 4;
  ScoredRegion region;
  region.row0 = margin;
  region.col0 = margin;
  region.height = tiles.source_height - 2 * margin;
  region.width = tiles.source_width - 2 * margin;
  return region;
}

Grid assemble_centers(const TileSet& tiles, const std::vector<Grid>& outputs,
                      int factor) {
  if (outputs.size() != tiles.origins.size())
    throw ShapeMismatch("assemble_centers: one output per chip required");
  const int hr_chip = tiles.chip * factor;
  for (const Grid& out : outputs)
    if (out.height != hr_chip || out.width != hr_chip)
      throw ShapeMismatch("assemble_centers: output dims must be factor x chip");

  const ScoredRegion region = scored_region(tiles);
  const int margin = tiles.chip / 4;     // center-crop offset, LR pixels
  const int center = tiles.chip / 2;     // center-crop size, LR pixels
  const int channels = outputs.empty() ? 1 : outputs.front().channels;

  Grid assembled(region.height * factor, region.width * factor, channels);
  assembled.normalized = outputs.empty() ? false : outputs.front().normalized;
  std::vector<char> written(
      static_cast<std::size_t>(region.height) * factor * region.width * factor,
      0);

  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const auto [orow, ocol] = tiles.origins[i];
    const Grid& out = outputs[i];
    if (out.channels != channels)
      throw ShapeMismatch("assemble_centers: channel counts differ");
    // HR offset of this chip's center crop inside the assembled region.
    const int dst_row0 = (orow + margin - region.row0) * factor;
    const int dst_col0 = (ocol + margin - region.col0) * factor;
    for (int y = 0; y < center * factor; ++y) {
      for (int x = 0; x < center * factor; ++x) {
        const int dy = dst_row0 + y, dx = dst_col0 + x;
        written[static_cast<std::size_t>(dy) * region.width * factor + dx] = 1;
        for (int c = 0; c < channels; ++c)
          assembled.at(dy, dx, c) =
              out.at(margin * factor + y, margin * factor + x, c);
      }
    }
  }

  for (char w : written)
    if (!w)
      throw CoverageGap("assemble_centers: scored pixels left uncovered");
  return assembled;
}

}  // namespace csr
