#include "csr/model.hpp"

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "csr/de_kernel.hpp"
#include "csr/errors.hpp"

namespace csr {

LayerSpec LayerSpec::conv(int in_ch, int out_ch, int kernel) {
  LayerSpec s;
  s.kind = LayerKind::conv2d;
  s.in_channels = in_ch;
  s.out_channels = out_ch;
  s.kernel = kernel;
  return s;
}
LayerSpec LayerSpec::relu_layer() { return {LayerKind::relu}; }
LayerSpec LayerSpec::tanh_layer() { return {LayerKind::tanh}; }
LayerSpec LayerSpec::shuffle(int r) {
  LayerSpec s;
  s.kind = LayerKind::pixel_shuffle;
  s.factor = r;
  return s;
}
LayerSpec LayerSpec::de(int n) {
  LayerSpec s;
  s.kind = LayerKind::de_layer;
  s.factor = n;
  return s;
}

void ModelSpec::validate() const {
  if (input_channels < 1) throw Error("model: input channels must be >= 1");
  if (layers.empty()) throw Error("model: no layers");
  int channels = input_channels;
  int scale = 1;
  int de_count = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& layer = layers[i];
    switch (layer.kind) {
      case LayerKind::conv2d:
        if (layer.in_channels != channels)
          throw Error("model: conv layer " + std::to_string(i) +
                      " expects " + std::to_string(layer.in_channels) +
                      " channels but receives " + std::to_string(channels));
        if (layer.kernel < 1 || layer.kernel % 2 == 0)
          throw Error("model: conv kernels must be odd");
        if (layer.out_channels < 1) throw Error("model: conv out channels");
        channels = layer.out_channels;
        break;
      case LayerKind::pixel_shuffle:
        if (layer.factor < 1) throw Error("model: pixel shuffle factor");
        if (channels % (layer.factor * layer.factor) != 0)
          throw Error("model: pixel shuffle needs r^2 channel groups");
        channels /= layer.factor * layer.factor;
        scale *= layer.factor;
        break;
      case LayerKind::de_layer:
        ++de_count;
        if (de_count > 1) throw Error("model: at most one enforcement layer");
        if (i + 1 != layers.size())
          throw Error("model: the enforcement layer must be last");
        if (i == 0 || layers[i - 1].kind != LayerKind::tanh)
          throw Error("model: tanh must immediately precede enforcement");
        if (layer.factor != scale)
          throw Error("model: enforcement factor must equal the network scale");
        if (channels != input_channels)
          throw Error("model: enforcement needs the input channel count");
        break;
      case LayerKind::relu:
      case LayerKind::tanh:
        break;
    }
  }
}

int ModelSpec::upscale_factor() const {
  int scale = 1;
  for (const LayerSpec& layer : layers)
    if (layer.kind == LayerKind::pixel_shuffle) scale *= layer.factor;
  return scale;
}

bool ModelSpec::has_de() const {
  return !layers.empty() && layers.back().kind == LayerKind::de_layer;
}

int ModelSpec::conv_count() const {
  int n = 0;
  for (const LayerSpec& layer : layers)
    if (layer.kind == LayerKind::conv2d) ++n;
  return n;
}

ModelSpec make_sr_model(int channels, int factor, bool with_de) {
  ModelSpec spec;
  spec.input_channels = channels;
  spec.layers = {
      LayerSpec::conv(channels, 64, 9),
      LayerSpec::relu_layer(),
      LayerSpec::conv(64, 32, 5),
      LayerSpec::relu_layer(),
      LayerSpec::conv(32, channels * factor * factor, 5),
      LayerSpec::shuffle(factor),
      LayerSpec::tanh_layer(),
  };
  if (with_de) spec.layers.push_back(LayerSpec::de(factor));
  spec.validate();
  return spec;
}

template <typename T>
bool WeightsT<T>::all_finite() const {
  for (const ConvParams<T>& conv : convs) {
    for (T v : conv.kernel)
      if (!std::isfinite(static_cast<double>(v))) return false;
    for (T v : conv.bias)
      if (!std::isfinite(static_cast<double>(v))) return false;
  }
  return true;
}

template <typename T>
WeightsT<T> zero_weights(const ModelSpec& spec) {
  spec.validate();
  WeightsT<T> w;
  for (const LayerSpec& layer : spec.layers) {
    if (layer.kind != LayerKind::conv2d) continue;
    ConvParams<T> conv;
    conv.kh = conv.kw = layer.kernel;
    conv.in_ch = layer.in_channels;
    conv.out_ch = layer.out_channels;
    conv.kernel.assign(static_cast<std::size_t>(conv.kh) * conv.kw *
                           conv.in_ch * conv.out_ch,
                       T(0));
    conv.bias.assign(static_cast<std::size_t>(conv.out_ch), T(0));
    w.convs.push_back(std::move(conv));
  }
  return w;
}

template <typename T>
WeightsT<T> init_weights(const ModelSpec& spec, Rng& rng) {
  WeightsT<T> w = zero_weights<T>(spec);
  for (ConvParams<T>& conv : w.convs) {
    const double fan_in =
        static_cast<double>(conv.kh) * conv.kw * conv.in_ch;
    const double stddev = 1.0 / std::sqrt(fan_in);
    for (T& v : conv.kernel)
      v = static_cast<T>(rng.truncated_normal(2.0) * stddev);
  }
  return w;
}

template <typename Dst, typename Src>
WeightsT<Dst> cast_weights(const WeightsT<Src>& w) {
  WeightsT<Dst> out;
  out.convs.resize(w.convs.size());
  for (std::size_t i = 0; i < w.convs.size(); ++i) {
    const ConvParams<Src>& src = w.convs[i];
    ConvParams<Dst>& dst = out.convs[i];
    dst.kh = src.kh;
    dst.kw = src.kw;
    dst.in_ch = src.in_ch;
    dst.out_ch = src.out_ch;
    dst.kernel.resize(src.kernel.size());
    dst.bias.resize(src.bias.size());
    for (std::size_t j = 0; j < src.kernel.size(); ++j)
      dst.kernel[j] = static_cast<Dst>(src.kernel[j]);
    for (std::size_t j = 0; j < src.bias.size(); ++j)
      dst.bias[j] = static_cast<Dst>(src.bias[j]);
  }
  return out;
}

namespace {

// c[m x n] += a[m x k] * b[k x n], all row-major. The j loop carries one
// accumulator per output element, so vectorization cannot reorder any
// floating-point reduction: results are bit-stable.
template <typename T>
void gemm_acc(const T* __restrict a, const T* __restrict b, T* __restrict c,
              int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<std::size_t>(i) * k;
    T* crow = c + static_cast<std::size_t>(i) * n;
    for (int kk = 0; kk < k; ++kk) {
      const T av = arow[kk];
      const T* brow = b + static_cast<std::size_t>(kk) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// c[k x n] += a^T[k x m] * b[m x n] where a is m x k row-major.
template <typename T>
void gemm_at_acc(const T* __restrict a, const T* __restrict b,
                 T* __restrict c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<std::size_t>(i) * k;
    const T* brow = b + static_cast<std::size_t>(i) * n;
    for (int kk = 0; kk < k; ++kk) {
      const T av = arow[kk];
      T* crow = c + static_cast<std::size_t>(kk) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// c[m x k] = a[m x n] * b^T[n x k] where b is k x n row-major.
template <typename T>
void gemm_bt(const T* __restrict a, const T* __restrict b, T* __restrict c,
             int m, int n, int k) {
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<std::size_t>(i) * n;
    T* crow = c + static_cast<std::size_t>(i) * k;
    for (int kk = 0; kk < k; ++kk) {
      const T* brow = b + static_cast<std::size_t>(kk) * n;
      T acc = T(0);
      for (int j = 0; j < n; ++j) acc += arow[j] * brow[j];
      crow[kk] = acc;
    }
  }
}

// Patch matrix for same-padding convolution: one row per output position,
// columns ordered (ky, kx, ci) to match the kernel layout.
template <typename T>
void im2col(const Tensor<T>& in, int kernel, std::vector<T>& cols) {
  const int pad = kernel / 2;
  const int k_size = kernel * kernel * in.channels;
  cols.assign(static_cast<std::size_t>(in.height) * in.width * k_size, T(0));
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      T* row = cols.data() +
               (static_cast<std::size_t>(y) * in.width + x) * k_size;
      for (int ky = 0; ky < kernel; ++ky) {
        const int iy = y + ky - pad;
        if (iy < 0 || iy >= in.height) continue;
        for (int kx = 0; kx < kernel; ++kx) {
          const int ix = x + kx - pad;
          if (ix < 0 || ix >= in.width) continue;
          std::memcpy(row + (static_cast<std::size_t>(ky) * kernel + kx) *
                                in.channels,
                      in.data.data() + in.index(iy, ix, 0),
                      sizeof(T) * in.channels);
        }
      }
    }
  }
}

// Scatter-add of a patch-matrix gradient back onto the input.
template <typename T>
void col2im_acc(const std::vector<T>& cols, int kernel, Tensor<T>& din) {
  const int pad = kernel / 2;
  const int k_size = kernel * kernel * din.channels;
  for (int y = 0; y < din.height; ++y) {
    for (int x = 0; x < din.width; ++x) {
      const T* row = cols.data() +
                     (static_cast<std::size_t>(y) * din.width + x) * k_size;
      for (int ky = 0; ky < kernel; ++ky) {
        const int iy = y + ky - pad;
        if (iy < 0 || iy >= din.height) continue;
        for (int kx = 0; kx < kernel; ++kx) {
          const int ix = x + kx - pad;
          if (ix < 0 || ix >= din.width) continue;
          const T* src = row + (static_cast<std::size_t>(ky) * kernel + kx) *
                                   din.channels;
          T* dst = din.data.data() + din.index(iy, ix, 0);
          for (int c = 0; c < din.channels; ++c) dst[c] += src[c];
        }
      }
    }
  }
}

template <typename T>
Tensor<T> conv_forward(const Tensor<T>& in, const ConvParams<T>& p) {
  Tensor<T> out(in.height, in.width, p.out_ch);
  std::vector<T> cols;
  im2col(in, p.kh, cols);
  const int m = in.height * in.width;
  for (int i = 0; i < m; ++i)
    std::memcpy(out.data.data() + static_cast<std::size_t>(i) * p.out_ch,
                p.bias.data(), sizeof(T) * p.out_ch);
  gemm_acc(cols.data(), p.kernel.data(), out.data.data(), m,
           p.kh * p.kw * p.in_ch, p.out_ch);
  return out;
}

template <typename T>
Tensor<T> conv_backward(const Tensor<T>& in, const ConvParams<T>& p,
                        const Tensor<T>& dout, ConvParams<T>& grads) {
  const int m = in.height * in.width;
  const int k_size = p.kh * p.kw * p.in_ch;
  std::vector<T> cols;
  im2col(in, p.kh, cols);

  for (int i = 0; i < m; ++i) {
    const T* row = dout.data.data() + static_cast<std::size_t>(i) * p.out_ch;
    for (int j = 0; j < p.out_ch; ++j) grads.bias[j] += row[j];
  }
  gemm_at_acc(cols.data(), dout.data.data(), grads.kernel.data(), m, k_size,
              p.out_ch);

  std::vector<T> dcols(static_cast<std::size_t>(m) * k_size);
  gemm_bt(dout.data.data(), p.kernel.data(), dcols.data(), m, p.out_ch,
          k_size);
  Tensor<T> din(in.height, in.width, in.channels);
  col2im_acc(dcols, p.kh, din);
  return din;
}

template <typename T>
Tensor<T> shuffle_forward(const Tensor<T>& in, int r) {
  const int out_ch = in.channels / (r * r);
  Tensor<T> out(in.height * r, in.width * r, out_ch);
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x)
      for (int c = 0; c < out_ch; ++c)
        for (int a = 0; a < r; ++a)
          for (int b = 0; b < r; ++b)
            out.at(y * r + a, x * r + b, c) =
                in.at(y, x, c * r * r + a * r + b);
  return out;
}

template <typename T>
Tensor<T> shuffle_backward(const Tensor<T>& dout, int r) {
  const int in_ch = dout.channels * r * r;
  Tensor<T> din(dout.height / r, dout.width / r, in_ch);
  for (int y = 0; y < din.height; ++y)
    for (int x = 0; x < din.width; ++x)
      for (int c = 0; c < dout.channels; ++c)
        for (int a = 0; a < r; ++a)
          for (int b = 0; b < r; ++b)
            din.at(y, x, c * r * r + a * r + b) =
                dout.at(y * r + a, x * r + b, c);
  return din;
}

template <typename T>
Tensor<T> de_forward_tensor(const Tensor<T>& pre, const Tensor<T>& target,
                            int n) {
  if (pre.height != target.height * n || pre.width != target.width * n ||
      pre.channels != target.channels)
    throw ShapeMismatch("enforcement layer: pre/target shapes inconsistent");
  Tensor<T> out(pre.height, pre.width, pre.channels);
  const std::size_t m = static_cast<std::size_t>(n) * n;
  std::vector<T> block(m), corrected(m);
  for (int ly = 0; ly < target.height; ++ly) {
    for (int lx = 0; lx < target.width; ++lx) {
      for (int c = 0; c < target.channels; ++c) {
        std::size_t k = 0;
        for (int dy = 0; dy < n; ++dy)
          for (int dx = 0; dx < n; ++dx)
            block[k++] = pre.at(ly * n + dy, lx * n + dx, c);
        de_kernel::apply(block.data(), m, target.at(ly, lx, c),
                         corrected.data());
        k = 0;
        for (int dy = 0; dy < n; ++dy)
          for (int dx = 0; dx < n; ++dx)
            out.at(ly * n + dy, lx * n + dx, c) = corrected[k++];
      }
    }
  }
  return out;
}

// Cotangent through the enforcement layer with respect to its direct input.
// The target is the network input, a leaf, so its cotangent is dropped.
template <typename T>
Tensor<T> de_backward_tensor(const Tensor<T>& pre, const Tensor<T>& target,
                             int n, const Tensor<T>& dout) {
  Tensor<T> din(pre.height, pre.width, pre.channels);
  const std::size_t m = static_cast<std::size_t>(n) * n;
  std::vector<T> block(m), upstream(m), dx(m);
  for (int ly = 0; ly < target.height; ++ly) {
    for (int lx = 0; lx < target.width; ++lx) {
      for (int c = 0; c < target.channels; ++c) {
        std::size_t k = 0;
        for (int dy = 0; dy < n; ++dy)
          for (int dx2 = 0; dx2 < n; ++dx2, ++k) {
            block[k] = pre.at(ly * n + dy, lx * n + dx2, c);
            upstream[k] = dout.at(ly * n + dy, lx * n + dx2, c);
          }
        T dp = T(0);
        de_kernel::vjp(block.data(), m, target.at(ly, lx, c), upstream.data(),
                       dx.data(), dp);
        k = 0;
        for (int dy = 0; dy < n; ++dy)
          for (int dx2 = 0; dx2 < n; ++dx2)
            din.at(ly * n + dy, lx * n + dx2, c) = dx[k++];
      }
    }
  }
  return din;
}

template <typename T>
Tensor<T> apply_layer(const LayerSpec& layer, const ConvParams<T>* conv,
                      const Tensor<T>& in, const Tensor<T>& net_input) {
  switch (layer.kind) {
    case LayerKind::conv2d:
      if (in.channels != layer.in_channels)
        throw ShapeMismatch("model: conv input channel mismatch");
      return conv_forward(in, *conv);
    case LayerKind::relu: {
      Tensor<T> out = in;
      for (T& v : out.data) v = v > T(0) ? v : T(0);
      return out;
    }
    case LayerKind::tanh: {
      Tensor<T> out = in;
      for (T& v : out.data) v = std::tanh(v);
      return out;
    }
    case LayerKind::pixel_shuffle:
      return shuffle_forward(in, layer.factor);
    case LayerKind::de_layer:
      return de_forward_tensor(in, net_input, layer.factor);
  }
  throw Error("model: unknown layer kind");
}

}  // namespace

template <typename T>
Tensor<T> model_forward(const ModelSpec& spec, const WeightsT<T>& weights,
                        const Tensor<T>& input, Tape<T>* tape) {
  if (input.channels != spec.input_channels)
    throw ShapeMismatch("model: input has " + std::to_string(input.channels) +
                        " channels, spec wants " +
                        std::to_string(spec.input_channels));
  if (static_cast<int>(weights.convs.size()) != spec.conv_count())
    throw ShapeMismatch("model: weight record count mismatch");
  if (tape) {
    tape->layer_inputs.clear();
    tape->layer_inputs.reserve(spec.layers.size());
    tape->recorded = false;
  }
  Tensor<T> cur = input;
  std::size_t conv_idx = 0;
  for (const LayerSpec& layer : spec.layers) {
    if (tape) tape->layer_inputs.push_back(cur);
    const ConvParams<T>* conv = nullptr;
    if (layer.kind == LayerKind::conv2d) conv = &weights.convs[conv_idx++];
    cur = apply_layer(layer, conv, cur, input);
  }
  if (tape) {
    tape->output = cur;
    tape->recorded = true;
  }
  return cur;
}

template <typename T>
ForwardSplit<T> model_forward_split(const ModelSpec& spec,
                                    const WeightsT<T>& weights,
                                    const Tensor<T>& input) {
  if (!spec.has_de())
    throw NoDELayer("model: no enforcement layer to split at");
  Tape<T> tape;
  ForwardSplit<T> split;
  split.output = model_forward(spec, weights, input, &tape);
  split.pre_de = std::move(tape.layer_inputs.back());
  return split;
}

template <typename T>
ModelGrads<T> model_backward(const ModelSpec& spec, const WeightsT<T>& weights,
                             const Tape<T>& tape, const Tensor<T>& output_grad,
                             const Tensor<T>* pre_de_grad) {
  if (!tape.recorded || tape.layer_inputs.size() != spec.layers.size())
    throw NoTape("model: backward requires a recorded forward tape");
  if (pre_de_grad && !spec.has_de())
    throw NoDELayer("model: pre-enforcement gradient without such a layer");
  if (!output_grad.same_shape(tape.output))
    throw ShapeMismatch("model: output gradient shape mismatch");

  ModelGrads<T> grads;
  grads.weights = zero_weights<T>(spec);
  const Tensor<T>& net_input = tape.layer_inputs.front();

  Tensor<T> grad = output_grad;
  std::size_t conv_idx = grads.weights.convs.size();
  for (std::size_t ri = spec.layers.size(); ri-- > 0;) {
    const LayerSpec& layer = spec.layers[ri];
    const Tensor<T>& in = tape.layer_inputs[ri];
    switch (layer.kind) {
      case LayerKind::conv2d:
        --conv_idx;
        grad = conv_backward(in, weights.convs[conv_idx], grad,
                             grads.weights.convs[conv_idx]);
        break;
      case LayerKind::relu: {
        Tensor<T> din = grad;
        for (std::size_t i = 0; i < din.data.size(); ++i)
          din.data[i] = in.data[i] > T(0) ? grad.data[i] : T(0);
        grad = std::move(din);
        break;
      }
      case LayerKind::tanh: {
        const Tensor<T>& out = ri + 1 < spec.layers.size()
                                   ? tape.layer_inputs[ri + 1]
                                   : tape.output;
        Tensor<T> din = grad;
        for (std::size_t i = 0; i < din.data.size(); ++i)
          din.data[i] = grad.data[i] * (T(1) - out.data[i] * out.data[i]);
        grad = std::move(din);
        break;
      }
      case LayerKind::pixel_shuffle:
        grad = shuffle_backward(grad, layer.factor);
        break;
      case LayerKind::de_layer:
        grad = de_backward_tensor(in, net_input, layer.factor, grad);
        if (pre_de_grad) {
          if (!pre_de_grad->same_shape(grad))
            throw ShapeMismatch("model: pre-enforcement gradient shape");
          for (std::size_t i = 0; i < grad.data.size(); ++i)
            grad.data[i] += pre_de_grad->data[i];
        }
        break;
    }
  }
  grads.input = std::move(grad);
  return grads;
}

Grid model_upscale(const ModelSpec& spec, const Weights& weights,
                   const Grid& lr, bool skip_de) {
  if (!lr.normalized)
    throw NotNormalized("model_upscale: input must be normalized");
  ModelSpec run_spec = spec;
  if (skip_de && spec.has_de()) run_spec.layers.pop_back();
  const WeightsT<double> w64 = cast_weights<double>(weights);
  const Tensor<double> input = tensor_from_grid<double>(lr);
  const Tensor<double> out = model_forward(run_spec, w64, input);
  return grid_from_tensor(out, true);
}

template bool WeightsT<float>::all_finite() const;
template bool WeightsT<double>::all_finite() const;
template WeightsT<float> zero_weights<float>(const ModelSpec&);
template WeightsT<double> zero_weights<double>(const ModelSpec&);
template WeightsT<float> init_weights<float>(const ModelSpec&, Rng&);
template WeightsT<double> init_weights<double>(const ModelSpec&, Rng&);
template WeightsT<double> cast_weights<double, float>(const WeightsT<float>&);
template WeightsT<float> cast_weights<float, double>(const WeightsT<double>&);
template WeightsT<float> cast_weights<float, float>(const WeightsT<float>&);
template WeightsT<double> cast_weights<double, double>(
    const WeightsT<double>&);
template Tensor<float> model_forward<float>(const ModelSpec&,
                                            const WeightsT<float>&,
                                            const Tensor<float>&,
                                            Tape<float>*);
template Tensor<double> model_forward<double>(const ModelSpec&,
                                              const WeightsT<double>&,
                                              const Tensor<double>&,
                                              Tape<double>*);
template ForwardSplit<float> model_forward_split<float>(
    const ModelSpec&, const WeightsT<float>&, const Tensor<float>&);
template ForwardSplit<double> model_forward_split<double>(
    const ModelSpec&, const WeightsT<double>&, const Tensor<double>&);
template ModelGrads<float> model_backward<float>(const ModelSpec&,
                                                 const WeightsT<float>&,
                                                 const Tape<float>&,
                                                 const Tensor<float>&,
                                                 const Tensor<float>*);
template ModelGrads<double> model_backward<double>(const ModelSpec&,
                                                   const WeightsT<double>&,
                                                   const Tape<double>&,
                                                   const Tensor<double>&,
                                                   const Tensor<double>*);

}  // namespace csr
