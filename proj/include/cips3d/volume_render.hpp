#pragma once

// Alpha-compositing quadrature of the feature volume-rendering integral:
//   alpha_i = 1 - exp(-sigma_i delta_i)
//   T_i     = exp(-sum_{j<i} sigma_j delta_j)
//   w_i     = T_i alpha_i,   V = sum_i w_i v_i
// delta_i = t_{i+1} - t_i, and the last interval runs to the far bound.
// Leftover transmittance is not composited against any background.

#include <cstddef>
#include <span>

#include "cips3d/ops.hpp"

namespace cips3d::render {

template <typename T>
struct Composite {
  ad::Tensor<T> features;       // [R, C]
  ad::Tensor<T> weights;        // [R, S]
  ad::Tensor<T> transmittance;  // [R, S]
};

/// Interval lengths [rays, samples] from row-major depths. Throws unless
/// every ray's depths are strictly increasing and below `far`.
template <typename T>
ad::Tensor<T> interval_lengths(std::span<const double> depths, std::size_t rays, std::size_t samples, double far);

/// sigma [R, S] (>= 0), features [R, S, C], deltas [R, S].
template <typename T>
Composite<T> composite(const ad::Tensor<T>& sigma, const ad::Tensor<T>& features, const ad::Tensor<T>& deltas);

}  // namespace cips3d::render
