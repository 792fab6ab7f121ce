#include "csr/checkpoint.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "csr/errors.hpp"

namespace csr {

namespace {

constexpr char kMagic[4] = {'C', 'S', 'R', 'W'};
constexpr std::uint32_t kVersion = 1;

enum : std::uint32_t {
  kTagConv = 0,
  kTagRelu = 1,
  kTagTanh = 2,
  kTagShuffle = 3,
  kTagDe = 4,
};

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void put_u32(std::FILE* f, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  std::fwrite(b, 1, 4, f);
}

std::uint32_t get_u32(std::FILE* f, const std::string& path) {
  unsigned char b[4];
  if (std::fread(b, 1, 4, f) != 4)
    throw IoError("checkpoint: truncated " + path);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_floats(std::FILE* f, const std::vector<float>& v) {
  std::vector<unsigned char> raw(v.size() * 4);
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, &v[i], 4);
    raw[4 * i] = static_cast<unsigned char>(bits & 0xff);
    raw[4 * i + 1] = static_cast<unsigned char>((bits >> 8) & 0xff);
    raw[4 * i + 2] = static_cast<unsigned char>((bits >> 16) & 0xff);
    raw[4 * i + 3] = static_cast<unsigned char>((bits >> 24) & 0xff);
  }
  std::fwrite(raw.data(), 1, raw.size(), f);
}

std::vector<float> get_floats(std::FILE* f, std::size_t n,
                              const std::string& path) {
  std::vector<unsigned char> raw(n * 4);
  if (std::fread(raw.data(), 1, raw.size(), f) != raw.size())
    throw IoError("checkpoint: truncated " + path);
  std::vector<float> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t bits =
        static_cast<std::uint32_t>(raw[4 * i]) |
        (static_cast<std::uint32_t>(raw[4 * i + 1]) << 8) |
        (static_cast<std::uint32_t>(raw[4 * i + 2]) << 16) |
        (static_cast<std::uint32_t>(raw[4 * i + 3]) << 24);
    std::memcpy(&v[i], &bits, 4);
  }
  return v;
}

}  // namespace

void save_checkpoint(const ModelSpec& spec, const Weights& weights,
                     const std::string& path) {
  spec.validate();
  if (static_cast<int>(weights.convs.size()) != spec.conv_count())
    throw ShapeMismatch("checkpoint: weights do not match the model spec");
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError("cannot open " + path);

  std::fwrite(kMagic, 1, 4, f.get());
  put_u32(f.get(), kVersion);
  put_u32(f.get(), static_cast<std::uint32_t>(spec.layers.size()));
  put_u32(f.get(), static_cast<std::uint32_t>(spec.input_channels));
  std::size_t conv_idx = 0;
  for (const LayerSpec& layer : spec.layers) {
    switch (layer.kind) {
      case LayerKind::conv2d: {
        const ConvParams<float>& conv = weights.convs[conv_idx++];
        put_u32(f.get(), kTagConv);
        put_u32(f.get(), static_cast<std::uint32_t>(conv.kh));
        put_u32(f.get(), static_cast<std::uint32_t>(conv.kw));
        put_u32(f.get(), static_cast<std::uint32_t>(conv.in_ch));
        put_u32(f.get(), static_cast<std::uint32_t>(conv.out_ch));
        put_floats(f.get(), conv.kernel);
        put_floats(f.get(), conv.bias);
        break;
      }
      case LayerKind::relu:
        put_u32(f.get(), kTagRelu);
        break;
      case LayerKind::tanh:
        put_u32(f.get(), kTagTanh);
        break;
      case LayerKind::pixel_shuffle:
        put_u32(f.get(), kTagShuffle);
        put_u32(f.get(), static_cast<std::uint32_t>(layer.factor));
        break;
      case LayerKind::de_layer:
        put_u32(f.get(), kTagDe);
        put_u32(f.get(), static_cast<std::uint32_t>(layer.factor));
        break;
    }
  }
  if (std::ferror(f.get())) throw IoError("checkpoint: write failed " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw IoError("cannot open " + path);

  char magic[4];
  if (std::fread(magic, 1, 4, f.get()) != 4 ||
      std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("checkpoint: bad magic in " + path);
  const std::uint32_t version = get_u32(f.get(), path);
  if (version != kVersion)
    throw IoError("checkpoint: unsupported version " +
                  std::to_string(version) + " in " + path);
  const std::uint32_t layer_count = get_u32(f.get(), path);
  const std::uint32_t input_channels = get_u32(f.get(), path);

  Checkpoint ckpt;
  ckpt.spec.input_channels = static_cast<int>(input_channels);
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    const std::uint32_t tag = get_u32(f.get(), path);
    switch (tag) {
      case kTagConv: {
        ConvParams<float> conv;
        conv.kh = static_cast<int>(get_u32(f.get(), path));
        conv.kw = static_cast<int>(get_u32(f.get(), path));
        conv.in_ch = static_cast<int>(get_u32(f.get(), path));
        conv.out_ch = static_cast<int>(get_u32(f.get(), path));
        const std::size_t kernel_n = static_cast<std::size_t>(conv.kh) *
                                     conv.kw * conv.in_ch * conv.out_ch;
        conv.kernel = get_floats(f.get(), kernel_n, path);
        conv.bias =
            get_floats(f.get(), static_cast<std::size_t>(conv.out_ch), path);
        ckpt.spec.layers.push_back(
            LayerSpec::conv(conv.in_ch, conv.out_ch, conv.kh));
        ckpt.weights.convs.push_back(std::move(conv));
        break;
      }
      case kTagRelu:
        ckpt.spec.layers.push_back(LayerSpec::relu_layer());
        break;
      case kTagTanh:
        ckpt.spec.layers.push_back(LayerSpec::tanh_layer());
        break;
      case kTagShuffle:
        ckpt.spec.layers.push_back(
            LayerSpec::shuffle(static_cast<int>(get_u32(f.get(), path))));
        break;
      case kTagDe:
        ckpt.spec.layers.push_back(
            LayerSpec::de(static_cast<int>(get_u32(f.get(), path))));
        break;
      default:
        throw IoError("checkpoint: unknown layer tag in " + path);
    }
  }
  ckpt.spec.validate();
  return ckpt;
}

}  // namespace csr
