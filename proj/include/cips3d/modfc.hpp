#pragma once

// Modulated fully connected layer.
//
// For every batch item k with style S_k [d_in]:
//   Mod:    W'_k   = W (.) S_k          (row i of W scaled by S_k[i])
//   Demod:  W''_k  = W'_k / sqrt(sum_i W'_k[i, :]^2 + eps)   (per output column)
//   Linear: Y_k    = X_k W''_k + bias
//
// `modfc` does this with one broadcast multiply and one batched matmul and is
// differentiable. `modfc_reference` is the explicit per-item loop used as the
// oracle and as the benchmark baseline.

#include <cstddef>
#include <cstdint>
#include <span>

#include "cips3d/ops.hpp"

namespace cips3d::modfc {

struct Dims {
  std::size_t batch = 0;  // b
  std::size_t seq = 0;    // n
  std::size_t in = 0;     // d_in
  std::size_t out = 0;    // d_out
};

/// x [b, n, d_in], weight [d_in, d_out], bias [d_out], style [b, d_in] -> y [b, n, d_out].
template <typename T>
void modfc_reference(std::span<const T> x, std::span<const T> weight, std::span<const T> bias,
                     std::span<const T> style, const Dims& dims, bool demod, T eps, std::span<T> y);

template <typename T>
ad::Tensor<T> modfc_reference(const ad::Tensor<T>& x, const ad::Tensor<T>& weight, const ad::Tensor<T>& bias,
                              const ad::Tensor<T>& style, bool demod, T eps);

/// The broadcast-modulate + bmm formulation; same arguments as the reference.
template <typename T>
ad::Tensor<T> modfc(const ad::Tensor<T>& x, const ad::Tensor<T>& weight, const ad::Tensor<T>& bias,
                    const ad::Tensor<T>& style, bool demod, T eps);

struct BenchResult {
  Dims dims;
  std::size_t iters = 0;
  double reference_batches_per_s = 0;
  double efficient_batches_per_s = 0;
  double speedup = 0;  // efficient / reference
  double max_abs_diff = 0;
};

/// Times both paths in f32 on unit-scale random inputs (demod on) after
/// `warmup` untimed calls each, then checks they agree.
BenchResult benchmark(const Dims& dims, std::size_t iters, std::size_t warmup, std::uint64_t seed);

}  // namespace cips3d::modfc
