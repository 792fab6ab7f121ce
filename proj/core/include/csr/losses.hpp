#pragma once

#include "csr/tensor.hpp"

namespace csr {

template <typename T>
struct Loss {
  double value = 0.0;
  Tensor<T> grad;  // with respect to the prediction
};

// Mean squared error with gradient 2 (pred - truth) / n.
template <typename T>
Loss<T> loss_mse(const Tensor<T>& pred, const Tensor<T>& truth);

// MSE plus lambda times the MSE of the factor-downsampled fields; the
// approximate-invertibility baseline.
template <typename T>
Loss<T> loss_dual_resolution(const Tensor<T>& pred, const Tensor<T>& truth,
                             double lambda, int factor);

template <typename T>
struct DeRegularizedLoss {
  double value = 0.0;
  double correction_term = 0.0;  // mean |pre - final|, before weighting
  Tensor<T> grad_final;
  Tensor<T> grad_pre;
};

// MSE on the corrected output plus lambda times the mean absolute correction
// |pre - final|. The |.| subgradient at zero is taken as zero. Gradients are
// returned for both taps; the pre-DE one must be injected at the enforcement
// layer's input during the reverse pass.
template <typename T>
DeRegularizedLoss<T> loss_de_regularized(const Tensor<T>& final_out,
                                         const Tensor<T>& pre_de,
                                         const Tensor<T>& truth,
                                         double lambda);

}  // namespace csr
