#include "csr/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

#include "csr/errors.hpp"

namespace csr {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path);
  return f;
}

std::uint32_t read_u32_le(std::FILE* f, const std::string& path) {
  unsigned char b[4];
  if (std::fread(b, 1, 4, f) != 4) throw IoError("truncated file: " + path);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_u32_le(std::FILE* f, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  std::fwrite(b, 1, 4, f);
}

}  // namespace

Grid read_png(const std::string& path) {
  FilePtr file = open_file(path, "rb");

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png: allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png: allocation failed");
  }
  std::vector<png_bytep> row_ptrs;
  std::vector<unsigned char> pixels;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png: failed to decode " + path);
  }

  png_init_io(png, file.get());
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);

  if (bit_depth == 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png: 16-bit depth not supported: " + path);
  }
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png: expected 1 or 3 channels after expansion: " + path);
  }

  pixels.resize(static_cast<std::size_t>(height) * width * channels);
  row_ptrs.resize(height);
  for (png_uint_32 y = 0; y < height; ++y)
    row_ptrs[y] = pixels.data() + static_cast<std::size_t>(y) * width * channels;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Grid g(static_cast<int>(height), static_cast<int>(width), channels);
  for (std::size_t i = 0; i < pixels.size(); ++i)
    g.data[i] = static_cast<double>(pixels[i]);
  return g;
}

void write_png(const Grid& g, const std::string& path) {
  if (g.channels != 1 && g.channels != 3)
    throw IoError("png: only 1- or 3-channel grids can be written");
  FilePtr file = open_file(path, "wb");

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png: allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png: allocation failed");
  }
  std::vector<unsigned char> pixels(g.data.size());
  std::vector<png_bytep> row_ptrs(g.height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png: failed to encode " + path);
  }

  for (std::size_t i = 0; i < g.data.size(); ++i) {
    double v = std::round(g.data[i]);
    if (v < 0.0) v = 0.0;
    if (v > 255.0) v = 255.0;
    pixels[i] = static_cast<unsigned char>(v);
  }
  for (int y = 0; y < g.height; ++y)
    row_ptrs[y] =
        pixels.data() + static_cast<std::size_t>(y) * g.width * g.channels;

  png_init_io(png, file.get());
  png_set_IHDR(png, info, g.width, g.height, 8,
               g.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

namespace {

constexpr char kRawMagic[4] = {'C', 'S', 'R', 'G'};

}  // namespace

Grid read_raw_grid(const std::string& path) {
  FilePtr file = open_file(path, "rb");
  char magic[4];
  if (std::fread(magic, 1, 4, file.get()) != 4 ||
      std::memcmp(magic, kRawMagic, 4) != 0)
    throw IoError("raw grid: bad magic in " + path);
  const std::uint32_t height = read_u32_le(file.get(), path);
  const std::uint32_t width = read_u32_le(file.get(), path);
  const std::uint32_t channels = read_u32_le(file.get(), path);
  if (height == 0 || width == 0 || channels == 0)
    throw IoError("raw grid: zero dimension in " + path);

  const std::size_t count =
      static_cast<std::size_t>(height) * width * channels;
  std::vector<unsigned char> raw(count * 4);
  if (std::fread(raw.data(), 1, raw.size(), file.get()) != raw.size())
    throw IoError("raw grid: truncated samples in " + path);

  Grid g(static_cast<int>(height), static_cast<int>(width),
         static_cast<int>(channels));
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = static_cast<std::uint32_t>(raw[4 * i]) |
                         (static_cast<std::uint32_t>(raw[4 * i + 1]) << 8) |
                         (static_cast<std::uint32_t>(raw[4 * i + 2]) << 16) |
                         (static_cast<std::uint32_t>(raw[4 * i + 3]) << 24);
    float v;
    std::memcpy(&v, &bits, 4);
    g.data[i] = static_cast<double>(v);
  }
  return g;
}

void write_raw_grid(const Grid& g, const std::string& path) {
  FilePtr file = open_file(path, "wb");
  std::fwrite(kRawMagic, 1, 4, file.get());
  write_u32_le(file.get(), static_cast<std::uint32_t>(g.height));
  write_u32_le(file.get(), static_cast<std::uint32_t>(g.width));
  write_u32_le(file.get(), static_cast<std::uint32_t>(g.channels));
  std::vector<unsigned char> raw(g.data.size() * 4);
  for (std::size_t i = 0; i < g.data.size(); ++i) {
    const float v = static_cast<float>(g.data[i]);
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    raw[4 * i] = static_cast<unsigned char>(bits & 0xff);
    raw[4 * i + 1] = static_cast<unsigned char>((bits >> 8) & 0xff);
    raw[4 * i + 2] = static_cast<unsigned char>((bits >> 16) & 0xff);
    raw[4 * i + 3] = static_cast<unsigned char>((bits >> 24) & 0xff);
  }
  if (std::fwrite(raw.data(), 1, raw.size(), file.get()) != raw.size())
    throw IoError("raw grid: short write to " + path);
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

bool is_png_path(const std::string& path) { return ends_with(path, ".png"); }
bool is_raw_grid_path(const std::string& path) {
  return ends_with(path, ".csrg");
}

Grid read_image(const std::string& path) {
  if (is_png_path(path)) return read_png(path);
  if (is_raw_grid_path(path)) return read_raw_grid(path);
  throw IoError("unrecognized image extension (want .png or .csrg): " + path);
}

void write_image(const Grid& g, const std::string& path) {
  if (is_png_path(path)) {
    write_png(g, path);
    return;
  }
  if (is_raw_grid_path(path)) {
    write_raw_grid(g, path);
    return;
  }
  throw IoError("unrecognized image extension (want .png or .csrg): " + path);
}

}  // namespace csr
