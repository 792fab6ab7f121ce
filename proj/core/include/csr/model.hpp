#pragma once

#include <vector>

#include "csr/rng.hpp"
#include "csr/tensor.hpp"

namespace csr {

enum class LayerKind { conv2d, relu, tanh, pixel_shuffle, de_layer };

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  int in_channels = 0;   // conv2d
  int out_channels = 0;  // conv2d
  int kernel = 0;        // conv2d, odd, same padding
  int factor = 0;        // pixel_shuffle r / de_layer N

  static LayerSpec conv(int in_ch, int out_ch, int kernel);
  static LayerSpec relu_layer();
  static LayerSpec tanh_layer();
  static LayerSpec shuffle(int r);
  static LayerSpec de(int n);
};

// Layer list plus the input channel count. validate() enforces the wiring
// rules: conv channel chain consistent, odd kernels, pixel-shuffle factors
// multiply to the network scale, at most one enforcement layer which must be
// last and immediately preceded by tanh, and its factor must equal the
// network scale.
struct ModelSpec {
  int input_channels = 1;
  std::vector<LayerSpec> layers;

  void validate() const;
  int upscale_factor() const;  // product of pixel_shuffle factors
  bool has_de() const;
  int conv_count() const;
};

// The small trainable network: conv 64 (9x9) / conv 32 (5x5) /
// conv channels*factor^2 (5x5) with relu between, pixel shuffle, tanh, and
// optionally the enforcement head.
ModelSpec make_sr_model(int channels, int factor, bool with_de);

template <typename T>
struct ConvParams {
  int kh = 0, kw = 0, in_ch = 0, out_ch = 0;
  std::vector<T> kernel;  // [ky][kx][in][out]
  std::vector<T> bias;    // [out]
};

template <typename T>
struct WeightsT {
  std::vector<ConvParams<T>> convs;  // one per conv2d layer, in order

  bool all_finite() const;
};

using Weights = WeightsT<float>;

template <typename T>
WeightsT<T> zero_weights(const ModelSpec& spec);

// Truncated-Gaussian fan-in initialization: stddev 1/sqrt(kh*kw*in), samples
// redrawn beyond two standard deviations, biases zero.
template <typename T>
WeightsT<T> init_weights(const ModelSpec& spec, Rng& rng);

template <typename Dst, typename Src>
WeightsT<Dst> cast_weights(const WeightsT<Src>& w);

// Saved activations from a forward pass: the input of every layer plus the
// final output, enough to drive each layer's reverse rule.
template <typename T>
struct Tape {
  std::vector<Tensor<T>> layer_inputs;
  Tensor<T> output;
  bool recorded = false;
};

// Runs the network. When recording, the enforcement layer reads its LR
// target from the network input, so the model input must be the LR image.
template <typename T>
Tensor<T> model_forward(const ModelSpec& spec, const WeightsT<T>& weights,
                        const Tensor<T>& input, Tape<T>* tape = nullptr);

template <typename T>
struct ForwardSplit {
  Tensor<T> output;
  Tensor<T> pre_de;  // input of the enforcement layer (tanh output)
};

// Forward pass that also returns the intermediate image the enforcement
// layer corrected. Raises NoDELayer when the model has no such layer.
template <typename T>
ForwardSplit<T> model_forward_split(const ModelSpec& spec,
                                    const WeightsT<T>& weights,
                                    const Tensor<T>& input);

template <typename T>
struct ModelGrads {
  WeightsT<T> weights;
  Tensor<T> input;
};

// Reverse pass over a recorded tape. `pre_de_grad`, when given, is an extra
// cotangent injected at the enforcement layer's input (used by the
// correction-magnitude regularizer). Raises NoTape without a recorded tape.
template <typename T>
ModelGrads<T> model_backward(const ModelSpec& spec, const WeightsT<T>& weights,
                             const Tape<T>& tape, const Tensor<T>& output_grad,
                             const Tensor<T>* pre_de_grad = nullptr);

// Double-precision inference on a normalized LR grid. `skip_de` stops before
// the enforcement head to expose the uncorrected output.
Grid model_upscale(const ModelSpec& spec, const Weights& weights,
                   const Grid& lr, bool skip_de = false);

}  // namespace csr
