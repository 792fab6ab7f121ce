#pragma once

#include <string>

#include "csr/grid.hpp"

namespace csr {

// 8-bit PNG, 1 or 3 channels, returned on the [0, 255] scale.
Grid read_png(const std::string& path);

// Writes an 8-bit PNG; samples are clamped to [0, 255] and rounded.
void write_png(const Grid& g, const std::string& path);

// Raw grid format for scientific fields: 16-byte header (magic "CSRG",
// u32-LE height, width, channels) followed by float32-LE row-major samples.
Grid read_raw_grid(const std::string& path);
void write_raw_grid(const Grid& g, const std::string& path);

// Dispatch by extension: ".png" or ".csrg". Raises IoError otherwise.
Grid read_image(const std::string& path);
void write_image(const Grid& g, const std::string& path);

bool is_png_path(const std::string& path);
bool is_raw_grid_path(const std::string& path);

}  // namespace csr
