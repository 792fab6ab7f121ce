#include "csr/losses.hpp"

#include <cmath>
#include <vector>

#include "csr/errors.hpp"
#include "csr/numeric.hpp"
#include "csr/resample.hpp"

namespace csr {

namespace {

template <typename T>
double mean_squared(const Tensor<T>& a, const Tensor<T>& b) {
  std::vector<double> sq(a.data.size());
  for (std::size_t i = 0; i < sq.size(); ++i) {
    const double d =
        static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
    sq[i] = d * d;
  }
  return pairwise_mean(sq.data(), sq.size());
}

}  // namespace

template <typename T>
Loss<T> loss_mse(const Tensor<T>& pred, const Tensor<T>& truth) {
  if (!pred.same_shape(truth)) throw ShapeMismatch("loss_mse: shapes differ");
  Loss<T> loss;
  loss.value = mean_squared(pred, truth);
  loss.grad = Tensor<T>(pred.height, pred.width, pred.channels);
  const T scale = T(2) / static_cast<T>(pred.data.size());
  for (std::size_t i = 0; i < pred.data.size(); ++i)
    loss.grad.data[i] = scale * (pred.data[i] - truth.data[i]);
  return loss;
}

template <typename T>
Loss<T> loss_dual_resolution(const Tensor<T>& pred, const Tensor<T>& truth,
                             double lambda, int factor) {
  if (!pred.same_shape(truth))
    throw ShapeMismatch("loss_dual_resolution: shapes differ");
  if (pred.height % factor != 0 || pred.width % factor != 0)
    throw ShapeMismatch("loss_dual_resolution: dims not divisible by factor");

  Loss<T> loss = loss_mse(pred, truth);

  Tensor<T> dpred(pred.height / factor, pred.width / factor, pred.channels);
  Tensor<T> dtruth(dpred.height, dpred.width, dpred.channels);
  resample_detail::downsample_avg_raw(pred.data.data(), pred.height,
                                      pred.width, pred.channels, factor,
                                      dpred.data.data());
  resample_detail::downsample_avg_raw(truth.data.data(), truth.height,
                                      truth.width, truth.channels, factor,
                                      dtruth.data.data());
  loss.value += lambda * mean_squared(dpred, dtruth);

  // d/dpred of mean((D pred - D truth)^2) spreads each LR residual back over
  // its block through the downsampling transpose.
  Tensor<T> lr_grad(dpred.height, dpred.width, dpred.channels);
  const T scale = static_cast<T>(lambda) * T(2) /
                  static_cast<T>(dpred.data.size());
  for (std::size_t i = 0; i < dpred.data.size(); ++i)
    lr_grad.data[i] = scale * (dpred.data[i] - dtruth.data[i]);
  Tensor<T> spread(pred.height, pred.width, pred.channels);
  resample_detail::downsample_avg_transpose_raw(
      lr_grad.data.data(), dpred.height, dpred.width, dpred.channels, factor,
      spread.data.data());
  for (std::size_t i = 0; i < loss.grad.data.size(); ++i)
    loss.grad.data[i] += spread.data[i];
  return loss;
}

template <typename T>
DeRegularizedLoss<T> loss_de_regularized(const Tensor<T>& final_out,
                                         const Tensor<T>& pre_de,
                                         const Tensor<T>& truth,
                                         double lambda) {
  if (!final_out.same_shape(truth) || !final_out.same_shape(pre_de))
    throw ShapeMismatch("loss_de_regularized: shapes differ");

  DeRegularizedLoss<T> loss;
  Loss<T> base = loss_mse(final_out, truth);
  loss.grad_final = std::move(base.grad);
  loss.grad_pre = Tensor<T>(pre_de.height, pre_de.width, pre_de.channels);

  std::vector<double> abs_diff(pre_de.data.size());
  const T scale =
      static_cast<T>(lambda) / static_cast<T>(pre_de.data.size());
  for (std::size_t i = 0; i < pre_de.data.size(); ++i) {
    const T d = pre_de.data[i] - final_out.data[i];
    abs_diff[i] = std::abs(static_cast<double>(d));
    // sign(0) = 0: the |.| subgradient at the identity branch is zero.
    const T sign = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
    loss.grad_pre.data[i] = scale * sign;
    loss.grad_final.data[i] -= scale * sign;
  }
  loss.correction_term = pairwise_mean(abs_diff.data(), abs_diff.size());
  loss.value = base.value + lambda * loss.correction_term;
  return loss;
}

template Loss<float> loss_mse<float>(const Tensor<float>&,
                                     const Tensor<float>&);
template Loss<double> loss_mse<double>(const Tensor<double>&,
                                       const Tensor<double>&);
template Loss<float> loss_dual_resolution<float>(const Tensor<float>&,
                                                 const Tensor<float>&, double,
                                                 int);
template Loss<double> loss_dual_resolution<double>(const Tensor<double>&,
                                                   const Tensor<double>&,
                                                   double, int);
template DeRegularizedLoss<float> loss_de_regularized<float>(
    const Tensor<float>&, const Tensor<float>&, const Tensor<float>&, double);
template DeRegularizedLoss<double> loss_de_regularized<double>(
    const Tensor<double>&, const Tensor<double>&, const Tensor<double>&,
    double);

}  // namespace csr
