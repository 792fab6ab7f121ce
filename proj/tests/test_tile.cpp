#include "csr/errors.hpp"
#include "csr/resample.hpp"
#include "csr/rng.hpp"
#include "csr/tile.hpp"
#include "doctest.h"
#include "oracles.hpp"

TEST_CASE("tile origin placement") {
  csr::Rng rng(11);

  // 96x96, chip 48, stride 24: origins {0,24,48} per axis, 9 chips.
  const csr::Grid g96 = oracle::random_grid(rng, 96, 96, 1);
  const csr::TileSet t96 = csr::tile(g96, 48, 24);
  REQUIRE(t96.origins.size() == 9);
  int k = 0;
  for (int r : {0, 24, 48})
    for (int c : {0, 24, 48}) {
      CHECK(t96.origins[k].first == r);
      CHECK(t96.origins[k].second == c);
      ++k;
    }

  const csr::Grid g48 = oracle::random_grid(rng, 48, 48, 1);
  const csr::TileSet t48 = csr::tile(g48, 48, 24);
  REQUIRE(t48.origins.size() == 1);
  CHECK(t48.origins[0] == std::pair<int, int>(0, 0));

  // 50x48: second row origin clamps to 2.
  const csr::Grid g50 = oracle::random_grid(rng, 50, 48, 1);
  const csr::TileSet t50 = csr::tile(g50, 48, 24);
  REQUIRE(t50.origins.size() == 2);
  CHECK(t50.origins[0] == std::pair<int, int>(0, 0));
  CHECK(t50.origins[1] == std::pair<int, int>(2, 0));

  CHECK_THROWS_AS(csr::tile(g48, 64, 24), csr::ChipTooLarge);
}

TEST_CASE("assemble_centers: single chip gives the center of the output") {
  csr::Rng rng(12);
  const csr::Grid lr = oracle::random_grid(rng, 48, 48, 1);
  const csr::TileSet tiles = csr::tile(lr, 48, 24);
  const csr::Grid output = oracle::random_grid(rng, 192, 192, 1);
  const csr::Grid assembled = csr::assemble_centers(tiles, {output}, 4);
  CHECK(assembled.height == 96);
  CHECK(assembled.width == 96);
  for (int y = 0; y < 96; ++y)
    for (int x = 0; x < 96; ++x)
      CHECK(assembled.at(y, x, 0) == output.at(48 + y, 48 + x, 0));
}

TEST_CASE("assemble_centers reproduces the truth through an identity pipeline") {
  csr::Rng rng(13);
  const csr::Grid truth_hr = oracle::random_grid(rng, 96 * 4, 96 * 4, 1);
  const csr::Grid lr = csr::downsample_avg(truth_hr, 4);
  const csr::TileSet tiles = csr::tile(lr, 48, 24);

  std::vector<csr::Grid> outputs;
  for (std::size_t i = 0; i < tiles.origins.size(); ++i) {
    const auto [r, c] = tiles.origins[i];
    outputs.push_back(csr::crop(truth_hr, r * 4, c * 4, 192, 192));
  }
  const csr::Grid assembled = csr::assemble_centers(tiles, outputs, 4);
  const csr::ScoredRegion region = csr::scored_region(tiles);
  CHECK(region.row0 == 12);
  CHECK(assembled.height == region.height * 4);
  for (int y = 0; y < assembled.height; ++y)
    for (int x = 0; x < assembled.width; ++x)
      CHECK(assembled.at(y, x, 0) ==
            truth_hr.at(region.row0 * 4 + y, region.col0 * 4 + x, 0));
}

TEST_CASE("assemble_centers: seam columns come from exactly one chip") {
  // 48x72 source, two chips at columns 0 and 24. The seam sits at LR column
  // 36: left of it belongs to chip 0, right of it to chip 1.
  csr::Rng rng(14);
  const csr::Grid lr = oracle::random_grid(rng, 48, 72, 1);
  const csr::TileSet tiles = csr::tile(lr, 48, 24);
  REQUIRE(tiles.origins.size() == 2);

  const int n = 2;  // small factor keeps the trace readable
  std::vector<csr::Grid> outputs;
  for (std::size_t i = 0; i < tiles.origins.size(); ++i) {
    csr::Grid out(96, 96, 1, static_cast<double>(i + 1));  // constant tag
    outputs.push_back(out);
  }
  const csr::Grid assembled = csr::assemble_centers(tiles, outputs, n);
  const csr::ScoredRegion region = csr::scored_region(tiles);
  CHECK(region.width == 48);
  // HR columns [0, 48) map to LR [12, 36) -> chip 0; [48, 96) -> chip 1.
  for (int y = 0; y < assembled.height; ++y) {
    CHECK(assembled.at(y, (36 - 12) * n - 1, 0) == 1.0);
    CHECK(assembled.at(y, (36 - 12) * n, 0) == 2.0);
  }
}

TEST_CASE("assemble_centers rejects wrong output shapes") {
  csr::Rng rng(15);
  const csr::Grid lr = oracle::random_grid(rng, 48, 48, 1);
  const csr::TileSet tiles = csr::tile(lr, 48, 24);
  const csr::Grid bad = oracle::random_grid(rng, 96, 96, 1);
  CHECK_THROWS_AS(csr::assemble_centers(tiles, {bad}, 4), csr::ShapeMismatch);
  CHECK_THROWS_AS(csr::assemble_centers(tiles, {}, 4), csr::ShapeMismatch);
}

TEST_CASE("assemble_centers reports uncovered scored pixels") {
  // A hand-built tile set whose chips skip part of the scored region.
  csr::Rng rng(16);
  const csr::Grid lr = oracle::random_grid(rng, 48, 96, 1);
  csr::TileSet full = csr::tile(lr, 48, 24);
  REQUIRE(full.origins.size() == 3);
  csr::TileSet gappy = full;
  gappy.origins.pop_back();  // scored region still spans the full width

  std::vector<csr::Grid> outputs(gappy.origins.size(),
                                 oracle::random_grid(rng, 96, 96, 1));
  CHECK_THROWS_AS(csr::assemble_centers(gappy, outputs, 2), csr::CoverageGap);
}
