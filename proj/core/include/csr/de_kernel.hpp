#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <type_traits>

#include "csr/numeric.hpp"

namespace csr {

// Which case of the enforcement operator fired for a block: the block mean
// sat below the target (samples raised), matched it exactly (identity), or
// sat above it (samples lowered).
enum class DeBranch { raise, identity, lower };

namespace de_kernel {

// Exact arithmetic keeps outputs inside [-1, 1]; floating point can overshoot
// by a few ulp, which we clamp. Anything past this limit means the inputs
// were out of contract.
template <typename T>
inline constexpr T overshoot_limit =
    std::is_same_v<T, double> ? T(1e-15)
                              : T(8) * std::numeric_limits<T>::epsilon();

// Backward convention at the branch boundary: inside this window around
// mean == target the identity-branch Jacobian is used.
inline constexpr double boundary_window = 1e-12;

template <typename T>
inline T clamp_unit(T v) {
  const T over = v > T(1) ? v - T(1) : (v < T(-1) ? T(-1) - v : T(0));
  if (over > overshoot_limit<T>)
    throw std::logic_error("enforcement output escaped [-1,1] beyond fp slack");
  return v > T(1) ? T(1) : (v < T(-1) ? T(-1) : v);
}

// Forward operator on one block of m samples averaging to target. Writes the
// corrected samples to y (may alias x) and reports the branch taken. No
// input validation; callers owning untrusted data check ranges first.
template <typename T>
DeBranch apply(const T* x, std::size_t m, T target, T* y) {
  const T mean = pairwise_mean(x, m);
  if (mean == target) {
    for (std::size_t i = 0; i < m; ++i) y[i] = x[i];
    return DeBranch::identity;
  }
  if (mean < target) {
    // Raise: hand each sample the same fraction of its remaining headroom.
    // Grouped as (1-a)x + a so full saturation (target = 1, alpha exactly 1)
    // lands on 1.0 bit-exactly.
    const T alpha = (target - mean) / (T(1) - mean);
    const T keep = T(1) - alpha;
    for (std::size_t i = 0; i < m; ++i)
      y[i] = clamp_unit(keep * x[i] + alpha);
    return DeBranch::raise;
  }
  const T alpha = (mean - target) / (T(1) + mean);
  const T keep = T(1) - alpha;
  for (std::size_t i = 0; i < m; ++i)
    y[i] = clamp_unit(keep * x[i] - alpha);
  return DeBranch::lower;
}

// Reverse-mode derivative: dx = upstream^T * J_x and d_target = upstream^T *
// J_target, with the full Jacobian including the cross terms every sample
// picks up through the block mean. At the branch boundary the identity
// Jacobian is used (dx = upstream, d_target = 0).
template <typename T>
void vjp(const T* x, std::size_t m, T target, const T* upstream, T* dx,
         T& d_target) {
  const T mean = pairwise_mean(x, m);
  const T fm = static_cast<T>(m);
  if (std::abs(static_cast<double>(mean - target)) < boundary_window) {
    for (std::size_t i = 0; i < m; ++i) dx[i] = upstream[i];
    d_target = T(0);
    return;
  }
  if (mean < target) {
    const T denom = T(1) - mean;
    const T alpha = (target - mean) / denom;
    // s = sum_i u_i * (1 - x_i); the mean couples every dx_j to it.
    T s = T(0);
    for (std::size_t i = 0; i < m; ++i) s += upstream[i] * (T(1) - x[i]);
    const T cross = s * (target - T(1)) / (fm * denom * denom);
    for (std::size_t i = 0; i < m; ++i)
      dx[i] = (T(1) - alpha) * upstream[i] + cross;
    d_target = s / denom;
    return;
  }
  const T denom = T(1) + mean;
  const T alpha = (mean - target) / denom;
  T s = T(0);
  for (std::size_t i = 0; i < m; ++i) s += upstream[i] * (T(1) + x[i]);
  const T cross = -s * (target + T(1)) / (fm * denom * denom);
  for (std::size_t i = 0; i < m; ++i)
    dx[i] = (T(1) - alpha) * upstream[i] + cross;
  d_target = s / denom;
}

}  // namespace de_kernel
}  // namespace csr
