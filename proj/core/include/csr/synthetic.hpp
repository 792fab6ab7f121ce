#pragma once

#include <cstdint>
#include <vector>

#include "csr/grid.hpp"

namespace csr {

// Deterministic grayscale test texture on the [0, 255] scale: multi-octave
// value noise shaped by one of four variants (plain fbm, turbulence, ridged,
// sine-warped), stretched to span the full range.
Grid synthetic_texture(int size, std::uint64_t seed, int variant);

// The fixed evaluation corpus: `count` textures of size x size pixels,
// variants cycled, per-image seeds derived from `seed`.
std::vector<Grid> synthetic_corpus(int count, int size, std::uint64_t seed);

}  // namespace csr
