#pragma once

#include <cstddef>
#include <span>

namespace csr {

// Cascade (pairwise) summation with a data-independent reduction tree.
// Deterministic for a given length, and exact for 2^k copies of one value,
// which several round-trip guarantees in this library lean on.
template <typename T>
T pairwise_sum(const T* v, std::size_t n) {
  if (n == 0) return T(0);
  if (n == 1) return v[0];
  if (n == 2) return v[0] + v[1];
  const std::size_t half = n / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

template <typename T>
T pairwise_sum(std::span<const T> v) {
  return pairwise_sum(v.data(), v.size());
}

template <typename T>
T pairwise_mean(const T* v, std::size_t n) {
  return n == 0 ? T(0) : pairwise_sum(v, n) / static_cast<T>(n);
}

template <typename T>
T pairwise_mean(std::span<const T> v) {
  return pairwise_mean(v.data(), v.size());
}

}  // namespace csr
