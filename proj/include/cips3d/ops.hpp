#pragma once

// Differentiable operations. Every backward rule is itself written with these
// operations, so gradients can be differentiated again (needed for R1).
//
// Binary elementwise operations broadcast numpy-style (trailing axes aligned).

#include <cstddef>
#include <vector>

#include "cips3d/tensor.hpp"

namespace cips3d::ad {

template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b);

template <typename T> Tensor<T> neg(const Tensor<T>& x);
template <typename T> Tensor<T> scale(const Tensor<T>& x, T factor);
template <typename T> Tensor<T> add_scalar(const Tensor<T>& x, T value);

template <typename T> Tensor<T> sin(const Tensor<T>& x);
template <typename T> Tensor<T> cos(const Tensor<T>& x);
template <typename T> Tensor<T> exp(const Tensor<T>& x);
template <typename T> Tensor<T> sqrt(const Tensor<T>& x);
template <typename T> Tensor<T> square(const Tensor<T>& x);
template <typename T> Tensor<T> leaky_relu(const Tensor<T>& x, T slope);
/// log(1 + exp(x)), stable for large |x|.
template <typename T> Tensor<T> softplus(const Tensor<T>& x);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& x);

/// Sum of all elements; result has rank 0.
template <typename T> Tensor<T> sum(const Tensor<T>& x);
template <typename T> Tensor<T> mean(const Tensor<T>& x);
/// Reduce a broadcast: sums over every axis where `target` has extent 1 (or
/// is missing). `target` must broadcast to x.shape().
template <typename T> Tensor<T> sum_to(const Tensor<T>& x, const Shape& target);
template <typename T> Tensor<T> broadcast_to(const Tensor<T>& x, const Shape& target);

template <typename T> Tensor<T> reshape(const Tensor<T>& x, const Shape& shape);

/// Matrix product over the last two axes. Both operands have rank 2, or both
/// rank 3 with equal leading (batch) extent. Transpose flags apply to the
/// last two axes.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool transpose_a = false,
                 bool transpose_b = false);

/// Rows (axis 0) gathered by index; indices may repeat.
template <typename T>
Tensor<T> index_select_rows(const Tensor<T>& x, const std::vector<std::size_t>& index);
/// Adjoint of index_select_rows: zeros with `rows` rows, x[i] added to row index[i].
template <typename T>
Tensor<T> index_add_rows(const Tensor<T>& x, const std::vector<std::size_t>& index,
                         std::size_t rows);
template <typename T>
Tensor<T> slice_rows(const Tensor<T>& x, std::size_t begin, std::size_t end);
template <typename T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts);

/// Exclusive prefix sum along the last axis; with `reverse`, sums over the
/// strictly later entries instead. The two directions are adjoint.
template <typename T>
Tensor<T> cumsum_exclusive(const Tensor<T>& x, bool reverse = false);

struct ConvGeometry {
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t out_extent(std::size_t in) const { return (in + 2 * padding - kernel) / stride + 1; }
};

/// NHWC patches: [B,H,W,C] -> [B*Ho*Wo, k*k*C], zero padded.
template <typename T> Tensor<T> im2col(const Tensor<T>& x, const ConvGeometry& geom);
/// Adjoint of im2col back onto an NHWC tensor of `image_shape`.
template <typename T>
Tensor<T> col2im(const Tensor<T>& cols, const Shape& image_shape, const ConvGeometry& geom);

/// NHWC convolution with weights [k, k, Cin, Cout] and bias [Cout].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 const ConvGeometry& geom);

}  // namespace cips3d::ad
