// Materializes the synthetic texture corpus used for desk-scale experiments.

#include <cstdio>
#include <filesystem>
#include <string>

#include "CLI11.hpp"
#include "csr/image_io.hpp"
#include "csr/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"emit the synthetic evaluation corpus"};
  std::string out_dir;
  int count = 24;
  int size = 192;
  std::uint64_t seed = 7;
  std::string format = "png";
  app.add_option("--out", out_dir, "output directory")->required();
  app.add_option("--count", count)->check(CLI::PositiveNumber);
  app.add_option("--size", size)->check(CLI::PositiveNumber);
  app.add_option("--seed", seed);
  app.add_option("--format", format)->check(CLI::IsMember({"png", "csrg"}));
  CLI11_PARSE(app, argc, argv);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  const auto corpus = csr::synthetic_corpus(count, size, seed);
  for (int i = 0; i < count; ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "tex%03d.%s", i, format.c_str());
    const std::string path =
        (std::filesystem::path(out_dir) / name).string();
    csr::write_image(corpus[static_cast<std::size_t>(i)], path);
  }
  std::printf("wrote %d images to %s\n", count, out_dir.c_str());
  return 0;
}
