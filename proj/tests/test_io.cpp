#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "csr/checkpoint.hpp"
#include "csr/errors.hpp"
#include "csr/image_io.hpp"
#include "csr/rng.hpp"
#include "csr/synthetic.hpp"
#include "doctest.h"
#include "oracles.hpp"

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("png round trip, gray and rgb") {
  csr::Rng rng(41);
  for (int channels : {1, 3}) {
    csr::Grid g = oracle::random_grid(rng, 13, 17, channels, 0.0, 255.0, false);
    for (double& v : g.data) v = std::floor(v);  // integral 8-bit values
    const std::string path =
        temp_path("csr_io_" + std::to_string(channels) + ".png");
    csr::write_png(g, path);
    const csr::Grid back = csr::read_png(path);
    CHECK(back.height == g.height);
    CHECK(back.width == g.width);
    CHECK(back.channels == channels);
    CHECK(back.data == g.data);
    std::remove(path.c_str());
  }
}

TEST_CASE("png writer quantizes and clamps") {
  csr::Grid g(1, 3, 1);
  g.data = {-4.0, 127.4, 300.0};
  const std::string path = temp_path("csr_io_clamp.png");
  csr::write_png(g, path);
  const csr::Grid back = csr::read_png(path);
  CHECK(back.data[0] == 0.0);
  CHECK(back.data[1] == 127.0);
  CHECK(back.data[2] == 255.0);
  std::remove(path.c_str());
}

TEST_CASE("png read errors") {
  CHECK_THROWS_AS(csr::read_png(temp_path("does_not_exist.png")),
                  csr::IoError);
  const std::string path = temp_path("csr_io_junk.png");
  std::ofstream(path) << "not a png at all";
  CHECK_THROWS_AS(csr::read_png(path), csr::IoError);
  std::remove(path.c_str());
}

TEST_CASE("raw grid round trip preserves float32 payload") {
  csr::Rng rng(42);
  csr::Grid g = oracle::random_grid(rng, 5, 9, 2, -1000.0, 1000.0, false);
  for (double& v : g.data) v = static_cast<float>(v);  // representable
  const std::string path = temp_path("csr_io_grid.csrg");
  csr::write_raw_grid(g, path);
  const csr::Grid back = csr::read_raw_grid(path);
  CHECK(back.height == 5);
  CHECK(back.width == 9);
  CHECK(back.channels == 2);
  CHECK(back.data == g.data);

  // Header layout: magic + 3 u32 little-endian dims.
  std::ifstream in(path, std::ios::binary);
  char header[16];
  in.read(header, 16);
  CHECK(std::string(header, 4) == "CSRG");
  CHECK(static_cast<unsigned char>(header[4]) == 5);
  CHECK(static_cast<unsigned char>(header[8]) == 9);
  CHECK(static_cast<unsigned char>(header[12]) == 2);
  std::remove(path.c_str());
}

TEST_CASE("raw grid read errors") {
  const std::string path = temp_path("csr_io_bad.csrg");
  {
    std::ofstream out(path, std::ios::binary);
    const std::string bytes("XXXX\x01\x00\x00\x00", 8);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_AS(csr::read_raw_grid(path), csr::IoError);

  {
    std::ofstream out(path, std::ios::binary);
    const std::string bytes("CSRG\x02\x00\x00\x00", 8);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_AS(csr::read_raw_grid(path), csr::IoError);  // truncated
  std::remove(path.c_str());
}

TEST_CASE("read_image dispatches on extension") {
  CHECK_THROWS_AS(csr::read_image("picture.bmp"), csr::IoError);
  CHECK_THROWS_AS(csr::write_image(csr::Grid(2, 2, 1), "picture.tiff"),
                  csr::IoError);
  CHECK(csr::is_png_path("a/b.png"));
  CHECK(csr::is_raw_grid_path("a/b.csrg"));
  CHECK_FALSE(csr::is_png_path("a/bpng"));
}

TEST_CASE("checkpoint round trip is bit-exact and self-describing") {
  csr::Rng rng(43);
  const csr::ModelSpec spec = csr::make_sr_model(1, 4, true);
  const csr::Weights weights = csr::init_weights<float>(spec, rng);
  const std::string path = temp_path("csr_ckpt.csrw");
  csr::save_checkpoint(spec, weights, path);
  const csr::Checkpoint back = csr::load_checkpoint(path);

  CHECK(back.spec.layers.size() == spec.layers.size());
  CHECK(back.spec.input_channels == 1);
  CHECK(back.spec.has_de());
  CHECK(back.spec.upscale_factor() == 4);
  REQUIRE(back.weights.convs.size() == weights.convs.size());
  for (std::size_t i = 0; i < weights.convs.size(); ++i) {
    CHECK(back.weights.convs[i].kernel == weights.convs[i].kernel);
    CHECK(back.weights.convs[i].bias == weights.convs[i].bias);
  }
  std::remove(path.c_str());
}

TEST_CASE("checkpoint load errors") {
  const std::string path = temp_path("csr_ckpt_bad.csrw");
  std::ofstream(path, std::ios::binary) << "NOPE";
  CHECK_THROWS_AS(csr::load_checkpoint(path), csr::IoError);
  std::remove(path.c_str());
  CHECK_THROWS_AS(csr::load_checkpoint(temp_path("missing.csrw")),
                  csr::IoError);
}

TEST_CASE("synthetic corpus is deterministic and well-formed") {
  const auto a = csr::synthetic_corpus(4, 64, 7);
  const auto b = csr::synthetic_corpus(4, 64, 7);
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].data == b[i].data);
    CHECK(a[i].height == 64);
    CHECK(a[i].channels == 1);
    double lo = 1e9, hi = -1e9;
    for (double v : a[i].data) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    CHECK(lo == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(hi == doctest::Approx(255.0).epsilon(1e-9));
  }
  // Different seeds give different textures.
  const auto c = csr::synthetic_corpus(1, 64, 8);
  CHECK(c[0].data != a[0].data);
}
