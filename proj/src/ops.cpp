#include "cips3d/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

#include "cips3d/kernels.hpp"

namespace cips3d::ad {
namespace {

template <typename T>
bool any_requires_grad(const std::vector<Tensor<T>>& inputs) {
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor<T>& t) { return t.defined() && t.requires_grad(); });
}

// Builds the result tensor and, when recording, its backward edge.
template <typename T>
Tensor<T> record(Shape shape, std::vector<T> values, const char* op, std::vector<Tensor<T>> inputs,
                 BackwardFn<T> backward) {
  Tensor<T> out(std::move(shape), std::move(values));
  if (grad_enabled() && any_requires_grad(inputs)) out.attach(op, std::move(inputs), std::move(backward));
  return out;
}

std::vector<std::size_t> contiguous_strides(const Shape& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) strides[i - 1] = strides[i] * shape[i];
  return strides;
}

// Strides of `in` laid out against `out` (rank of out), zero on broadcast axes.
std::vector<std::size_t> broadcast_strides(const Shape& in, const Shape& out) {
  const std::size_t r = out.size();
  std::vector<std::size_t> strides(r, 0);
  const auto base = contiguous_strides(in);
  const std::size_t offset = r - in.size();
  for (std::size_t i = 0; i < in.size(); ++i) {
    const std::size_t d = in[i];
    if (d == out[offset + i]) {
      strides[offset + i] = d == 1 ? 0 : base[i];
    } else if (d != 1) {
      throw std::invalid_argument("broadcast: " + shape_str(in) + " incompatible with " + shape_str(out));
    }
  }
  return strides;
}

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t r = std::max(a.size(), b.size());
  Shape out(r, 1);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t da = i < r - a.size() ? 1 : a[i - (r - a.size())];
    const std::size_t db = i < r - b.size() ? 1 : b[i - (r - b.size())];
    if (da != db && da != 1 && db != 1)
      throw std::invalid_argument("broadcast: " + shape_str(a) + " vs " + shape_str(b));
    out[i] = std::max(da, db);
  }
  return out;
}

// Visits `shape` in row-major order one innermost row at a time:
// `row(flat, offsets, count, inner_strides)` covers flat indices
// [flat, flat + count) with per-operand offsets stepping by inner_strides.
template <std::size_t N, typename F>
void for_each_row(const Shape& shape, const std::array<std::vector<std::size_t>, N>& strides, F&& row) {
  const std::size_t total = shape_numel(shape);
  if (total == 0) return;
  const std::size_t r = shape.size();
  std::array<std::size_t, N> base{};
  if (r == 0) {
    row(std::size_t{0}, base, std::size_t{1}, base);
    return;
  }
  const std::size_t inner = shape[r - 1];
  std::array<std::size_t, N> inner_stride{};
  for (std::size_t k = 0; k < N; ++k) inner_stride[k] = strides[k][r - 1];
  std::vector<std::size_t> idx(r, 0);
  for (std::size_t flat = 0; flat < total; flat += inner) {
    row(flat, base, inner, inner_stride);
    for (std::size_t axis = r - 1; axis-- > 0;) {
      ++idx[axis];
      for (std::size_t k = 0; k < N; ++k) base[k] += strides[k][axis];
      if (idx[axis] < shape[axis]) break;
      for (std::size_t k = 0; k < N; ++k) base[k] -= strides[k][axis] * shape[axis];
      idx[axis] = 0;
    }
  }
}

template <typename T, typename F>
std::pair<Shape, std::vector<T>> binary_values(const Tensor<T>& a, const Tensor<T>& b, F f) {
  const auto da = a.data();
  const auto db = b.data();
  if (a.shape() == b.shape()) {
    std::vector<T> out(da.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(da[i], db[i]);
    return {a.shape(), std::move(out)};
  }
  Shape shape = broadcast_shape(a.shape(), b.shape());
  std::vector<T> out(shape_numel(shape));
  std::array<std::vector<std::size_t>, 2> strides{broadcast_strides(a.shape(), shape),
                                                  broadcast_strides(b.shape(), shape)};
  for_each_row<2>(shape, strides, [&](std::size_t i, const std::array<std::size_t, 2>& o, std::size_t count,
                                       const std::array<std::size_t, 2>& step) {
    T* dst = out.data() + i;
    const T* pa = da.data() + o[0];
    const T* pb = db.data() + o[1];
    if (step[0] == 1 && step[1] == 1) {
      for (std::size_t j = 0; j < count; ++j) dst[j] = f(pa[j], pb[j]);
    } else if (step[0] == 1 && step[1] == 0) {
      const T vb = *pb;
      for (std::size_t j = 0; j < count; ++j) dst[j] = f(pa[j], vb);
    } else if (step[0] == 0 && step[1] == 1) {
      const T va = *pa;
      for (std::size_t j = 0; j < count; ++j) dst[j] = f(va, pb[j]);
    } else {
      for (std::size_t j = 0; j < count; ++j) dst[j] = f(pa[j * step[0]], pb[j * step[1]]);
    }
  });
  return {std::move(shape), std::move(out)};
}

template <typename T, typename F>
std::vector<T> unary_values(const Tensor<T>& x, F f) {
  const auto d = x.data();
  std::vector<T> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = f(d[i]);
  return out;
}

template <typename T>
Tensor<T> reduce_like(const Tensor<T>& g, const Tensor<T>& like) {
  return g.shape() == like.shape() ? g : sum_to(g, like.shape());
}

template <typename T>
T stable_softplus(T x) {
  return std::max(x, T{0}) + std::log1p(std::exp(-std::abs(x)));
}

template <typename T>
T stable_sigmoid(T x) {
  if (x >= 0) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

}  // namespace

// ---------------------------------------------------------------- binary

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  auto [shape, values] = binary_values(a, b, [](T x, T y) { return x + y; });
  return record<T>(std::move(shape), std::move(values), "add", {a, b}, [a, b](const Tensor<T>& g) {
    return std::vector<Tensor<T>>{a.requires_grad() ? reduce_like(g, a) : Tensor<T>{},
                                  b.requires_grad() ? reduce_like(g, b) : Tensor<T>{}};
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  auto [shape, values] = binary_values(a, b, [](T x, T y) { return x - y; });
  return record<T>(std::move(shape), std::move(values), "sub", {a, b}, [a, b](const Tensor<T>& g) {
    return std::vector<Tensor<T>>{a.requires_grad() ? reduce_like(g, a) : Tensor<T>{},
                                  b.requires_grad() ? reduce_like(neg(g), b) : Tensor<T>{}};
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  auto [shape, values] = binary_values(a, b, [](T x, T y) { return x * y; });
  return record<T>(std::move(shape), std::move(values), "mul", {a, b}, [a, b](const Tensor<T>& g) {
    return std::vector<Tensor<T>>{a.requires_grad() ? reduce_like(mul(g, b), a) : Tensor<T>{},
                                  b.requires_grad() ? reduce_like(mul(g, a), b) : Tensor<T>{}};
  });
}

template <typename T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) {
  auto [shape, values] = binary_values(a, b, [](T x, T y) { return x / y; });
  return record<T>(std::move(shape), std::move(values), "div", {a, b}, [a, b](const Tensor<T>& g) {
    Tensor<T> ga, gb;
    if (a.requires_grad()) ga = reduce_like(div(g, b), a);
    if (b.requires_grad()) gb = reduce_like(neg(div(mul(g, a), square(b))), b);
    return std::vector<Tensor<T>>{ga, gb};
  });
}

// ---------------------------------------------------------------- unary

template <typename T>
Tensor<T> neg(const Tensor<T>& x) {
  return record<T>(x.shape(), unary_values(x, [](T v) { return -v; }), "neg", {x},
                   [](const Tensor<T>& g) { return std::vector<Tensor<T>>{neg(g)}; });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  return record<T>(x.shape(), unary_values(x, [factor](T v) { return v * factor; }), "scale", {x},
                   [factor](const Tensor<T>& g) { return std::vector<Tensor<T>>{scale(g, factor)}; });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& x, T value) {
  return record<T>(x.shape(), unary_values(x, [value](T v) { return v + value; }), "add_scalar", {x},
                   [](const Tensor<T>& g) { return std::vector<Tensor<T>>{g}; });
}

template <typename T>
Tensor<T> sin(const Tensor<T>& x) {
  return record<T>(x.shape(), unary_values(x, [](T v) { return std::sin(v); }), "sin", {x},
                   [x](const Tensor<T>& g) { return std::vector<Tensor<T>>{mul(g, cos(x))}; });
}

template <typename T>
Tensor<T> cos(const Tensor<T>& x) {
  return record<T>(x.shape(), unary_values(x, [](T v) { return std::cos(v); }), "cos", {x},
                   [x](const Tensor<T>& g) { return std::vector<Tensor<T>>{neg(mul(g, sin(x)))}; });
}

// Ops whose derivative reuses the forward value recompute it only when the
// backward pass itself is being recorded.
template <typename T>
Tensor<T> exp(const Tensor<T>& x) {
  Tensor<T> out(x.shape(), unary_values(x, [](T v) { return std::exp(v); }));
  if (grad_enabled() && x.requires_grad()) {
    const Tensor<T> value = out.detach();
    out.attach("exp", {x}, [x, value](const Tensor<T>& g) {
      return std::vector<Tensor<T>>{mul(g, grad_enabled() ? exp(x) : value)};
    });
  }
  return out;
}

template <typename T>
Tensor<T> sqrt(const Tensor<T>& x) {
  Tensor<T> out(x.shape(), unary_values(x, [](T v) { return std::sqrt(v); }));
  if (grad_enabled() && x.requires_grad()) {
    const Tensor<T> value = out.detach();
    out.attach("sqrt", {x}, [x, value](const Tensor<T>& g) {
      return std::vector<Tensor<T>>{div(g, scale(grad_enabled() ? sqrt(x) : value, T{2}))};
    });
  }
  return out;
}

template <typename T>
Tensor<T> square(const Tensor<T>& x) {
  return record<T>(x.shape(), unary_values(x, [](T v) { return v * v; }), "square", {x},
                   [x](const Tensor<T>& g) { return std::vector<Tensor<T>>{mul(g, scale(x, T{2}))}; });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
  Tensor<T> out(x.shape(), unary_values(x, [slope](T v) { return v >= 0 ? v : v * slope; }));
  if (grad_enabled() && x.requires_grad()) {
    // Piecewise-linear: the derivative is a constant mask almost everywhere.
    Tensor<T> mask(x.shape(), unary_values(x, [slope](T v) { return v >= 0 ? T{1} : slope; }));
    out.attach("leaky_relu", {x},
               [mask](const Tensor<T>& g) { return std::vector<Tensor<T>>{mul(g, mask)}; });
  }
  return out;
}

template <typename T>
Tensor<T> softplus(const Tensor<T>& x) {
  return record<T>(x.shape(), unary_values(x, [](T v) { return stable_softplus(v); }), "softplus", {x},
                   [x](const Tensor<T>& g) { return std::vector<Tensor<T>>{mul(g, sigmoid(x))}; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  Tensor<T> out(x.shape(), unary_values(x, [](T v) { return stable_sigmoid(v); }));
  if (grad_enabled() && x.requires_grad()) {
    const Tensor<T> value = out.detach();
    out.attach("sigmoid", {x}, [x, value](const Tensor<T>& g) {
      const Tensor<T> s = grad_enabled() ? sigmoid(x) : value;
      return std::vector<Tensor<T>>{mul(g, mul(s, add_scalar(neg(s), T{1})))};
    });
  }
  return out;
}

// ---------------------------------------------------------------- reductions

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T acc = 0;
  for (T v : x.data()) acc += v;
  return record<T>(Shape{}, {acc}, "sum", {x},
                   [x](const Tensor<T>& g) { return std::vector<Tensor<T>>{broadcast_to(g, x.shape())}; });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  if (x.numel() == 0) throw std::invalid_argument("mean of an empty tensor");
  return scale(sum(x), T{1} / static_cast<T>(x.numel()));
}

template <typename T>
Tensor<T> sum_to(const Tensor<T>& x, const Shape& target) {
  if (target.size() > x.rank()) throw std::invalid_argument("sum_to: target rank exceeds input rank");
  std::vector<T> out(shape_numel(target), T{0});
  std::array<std::vector<std::size_t>, 1> strides{broadcast_strides(target, x.shape())};
  const auto d = x.data();
  for_each_row<1>(x.shape(), strides, [&](std::size_t i, const std::array<std::size_t, 1>& o, std::size_t count,
                                           const std::array<std::size_t, 1>& step) {
    const T* src = d.data() + i;
    T* dst = out.data() + o[0];
    if (step[0] == 0) {
      T acc = *dst;
      for (std::size_t j = 0; j < count; ++j) acc += src[j];
      *dst = acc;
    } else {
      for (std::size_t j = 0; j < count; ++j) dst[j * step[0]] += src[j];
    }
  });
  return record<T>(target, std::move(out), "sum_to", {x},
                   [x](const Tensor<T>& g) { return std::vector<Tensor<T>>{broadcast_to(g, x.shape())}; });
}

template <typename T>
Tensor<T> broadcast_to(const Tensor<T>& x, const Shape& target) {
  if (x.rank() > target.size()) throw std::invalid_argument("broadcast_to: input rank exceeds target rank");
  std::vector<T> out(shape_numel(target));
  std::array<std::vector<std::size_t>, 1> strides{broadcast_strides(x.shape(), target)};
  const auto d = x.data();
  for_each_row<1>(target, strides, [&](std::size_t i, const std::array<std::size_t, 1>& o, std::size_t count,
                                        const std::array<std::size_t, 1>& step) {
    for (std::size_t j = 0; j < count; ++j) out[i + j] = d[o[0] + j * step[0]];
  });
  return record<T>(target, std::move(out), "broadcast_to", {x},
                   [x](const Tensor<T>& g) { return std::vector<Tensor<T>>{sum_to(g, x.shape())}; });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, const Shape& shape) {
  Tensor<T> out = Tensor<T>::view_of(x, shape);
  if (grad_enabled() && x.requires_grad()) {
    const Shape from = x.shape();
    out.attach("reshape", {x}, [from](const Tensor<T>& g) { return std::vector<Tensor<T>>{reshape(g, from)}; });
  }
  return out;
}

// ---------------------------------------------------------------- matmul

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool transpose_a, bool transpose_b) {
  if (a.rank() != b.rank() || (a.rank() != 2 && a.rank() != 3))
    throw std::invalid_argument("matmul: unsupported ranks " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const bool batched = a.rank() == 3;
  const std::size_t batch = batched ? a.dim(0) : 1;
  if (batched && b.dim(0) != batch) throw std::invalid_argument("matmul: batch extent mismatch");
  const std::size_t ar = a.dim(a.rank() - 2), ac = a.dim(a.rank() - 1);
  const std::size_t br = b.dim(b.rank() - 2), bc = b.dim(b.rank() - 1);
  const std::size_t m = transpose_a ? ac : ar;
  const std::size_t k = transpose_a ? ar : ac;
  const std::size_t kb = transpose_b ? bc : br;
  const std::size_t n = transpose_b ? br : bc;
  if (k != kb)
    throw std::invalid_argument("matmul: inner dimensions differ " + shape_str(a.shape()) + " x " +
                                shape_str(b.shape()));

  std::vector<T> out(batch * m * n);
  std::vector<T> ta, tb;
  if (transpose_a) ta.resize(ar * ac);
  if (transpose_b) tb.resize(br * bc);
  for (std::size_t s = 0; s < batch; ++s) {
    const T* pa = a.data().data() + s * ar * ac;
    const T* pb = b.data().data() + s * br * bc;
    if (transpose_a) {
      kernels::transpose(pa, ta.data(), ar, ac);
      pa = ta.data();
    }
    if (transpose_b) {
      kernels::transpose(pb, tb.data(), br, bc);
      pb = tb.data();
    }
    kernels::gemm(pa, pb, out.data() + s * m * n, m, k, n);
  }
  Shape shape = batched ? Shape{batch, m, n} : Shape{m, n};
  return record<T>(std::move(shape), std::move(out), "matmul", {a, b},
                   [a, b, transpose_a, transpose_b](const Tensor<T>& g) {
                     Tensor<T> ga, gb;
                     if (a.requires_grad())
                       ga = transpose_a ? matmul(b, g, transpose_b, true) : matmul(g, b, false, !transpose_b);
                     if (b.requires_grad())
                       gb = transpose_b ? matmul(g, a, true, transpose_a) : matmul(a, g, !transpose_a, false);
                     return std::vector<Tensor<T>>{ga, gb};
                   });
}

// ---------------------------------------------------------------- row indexing

template <typename T>
Tensor<T> index_select_rows(const Tensor<T>& x, const std::vector<std::size_t>& index) {
  if (x.rank() == 0) throw std::invalid_argument("index_select_rows: scalar input");
  const std::size_t rows = x.dim(0);
  const std::size_t width = rows ? x.numel() / rows : 0;
  std::vector<T> out(index.size() * width);
  const auto d = x.data();
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= rows) throw std::out_of_range("index_select_rows: index out of range");
    std::copy_n(d.begin() + index[i] * width, width, out.begin() + i * width);
  }
  Shape shape = x.shape();
  shape[0] = index.size();
  return record<T>(std::move(shape), std::move(out), "index_select_rows", {x}, [index, rows](const Tensor<T>& g) {
    return std::vector<Tensor<T>>{index_add_rows(g, index, rows)};
  });
}

template <typename T>
Tensor<T> index_add_rows(const Tensor<T>& x, const std::vector<std::size_t>& index, std::size_t rows) {
  if (x.rank() == 0 || x.dim(0) != index.size())
    throw std::invalid_argument("index_add_rows: index length must match rows of input");
  const std::size_t width = index.empty() ? shape_numel(Shape(x.shape().begin() + 1, x.shape().end()))
                                          : x.numel() / index.size();
  std::vector<T> out(rows * width, T{0});
  const auto d = x.data();
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= rows) throw std::out_of_range("index_add_rows: index out of range");
    T* dst = out.data() + index[i] * width;
    const T* src = d.data() + i * width;
    for (std::size_t j = 0; j < width; ++j) dst[j] += src[j];
  }
  Shape shape = x.shape();
  shape[0] = rows;
  return record<T>(std::move(shape), std::move(out), "index_add_rows", {x}, [index](const Tensor<T>& g) {
    return std::vector<Tensor<T>>{index_select_rows(g, index)};
  });
}

template <typename T>
Tensor<T> slice_rows(const Tensor<T>& x, std::size_t begin, std::size_t end) {
  if (begin > end || end > x.dim(0)) throw std::out_of_range("slice_rows: bad range");
  std::vector<std::size_t> index(end - begin);
  std::iota(index.begin(), index.end(), begin);
  return index_select_rows(x, index);
}

template <typename T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  Shape shape = parts.front().shape();
  shape[0] = 0;
  std::vector<T> out;
  for (const auto& p : parts) {
    if (p.rank() != shape.size() || !std::equal(p.shape().begin() + 1, p.shape().end(), shape.begin() + 1))
      throw std::invalid_argument("concat_rows: trailing shapes differ");
    shape[0] += p.dim(0);
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  std::vector<std::size_t> offsets;
  std::size_t acc = 0;
  for (const auto& p : parts) {
    offsets.push_back(acc);
    acc += p.dim(0);
  }
  return record<T>(std::move(shape), std::move(out), "concat_rows", parts, [parts, offsets](const Tensor<T>& g) {
    std::vector<Tensor<T>> grads(parts.size());
    for (std::size_t i = 0; i < parts.size(); ++i)
      if (parts[i].requires_grad()) grads[i] = slice_rows(g, offsets[i], offsets[i] + parts[i].dim(0));
    return grads;
  });
}

template <typename T>
Tensor<T> cumsum_exclusive(const Tensor<T>& x, bool reverse) {
  if (x.rank() == 0) throw std::invalid_argument("cumsum_exclusive: scalar input");
  const std::size_t len = x.dim(x.rank() - 1);
  const std::size_t lines = len ? x.numel() / len : 0;
  std::vector<T> out(x.numel());
  const auto d = x.data();
  for (std::size_t l = 0; l < lines; ++l) {
    const T* src = d.data() + l * len;
    T* dst = out.data() + l * len;
    T acc = 0;
    if (!reverse) {
      for (std::size_t i = 0; i < len; ++i) {
        dst[i] = acc;
        acc += src[i];
      }
    } else {
      for (std::size_t i = len; i-- > 0;) {
        dst[i] = acc;
        acc += src[i];
      }
    }
  }
  return record<T>(x.shape(), std::move(out), "cumsum_exclusive", {x}, [reverse](const Tensor<T>& g) {
    return std::vector<Tensor<T>>{cumsum_exclusive(g, !reverse)};
  });
}

// ---------------------------------------------------------------- convolution

template <typename T>
Tensor<T> im2col(const Tensor<T>& x, const ConvGeometry& geom) {
  if (x.rank() != 4) throw std::invalid_argument("im2col: expected NHWC input, got " + shape_str(x.shape()));
  const std::size_t B = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
  const std::size_t K = geom.kernel;
  if (H + 2 * geom.padding < K || W + 2 * geom.padding < K)
    throw std::invalid_argument("im2col: kernel larger than padded input");
  const std::size_t Ho = geom.out_extent(H), Wo = geom.out_extent(W);
  const std::size_t width = K * K * C;
  std::vector<T> out(B * Ho * Wo * width, T{0});
  const auto d = x.data();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t oy = 0; oy < Ho; ++oy)
      for (std::size_t ox = 0; ox < Wo; ++ox) {
        T* row = out.data() + ((b * Ho + oy) * Wo + ox) * width;
        for (std::size_t ky = 0; ky < K; ++ky) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * geom.stride + ky) -
                                    static_cast<std::ptrdiff_t>(geom.padding);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
          for (std::size_t kx = 0; kx < K; ++kx) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * geom.stride + kx) -
                                      static_cast<std::ptrdiff_t>(geom.padding);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
            const T* src = d.data() + ((b * H + iy) * W + ix) * C;
            std::copy_n(src, C, row + (ky * K + kx) * C);
          }
        }
      }
  const Shape image_shape = x.shape();
  return record<T>(Shape{B * Ho * Wo, width}, std::move(out), "im2col", {x},
                   [image_shape, geom](const Tensor<T>& g) {
                     return std::vector<Tensor<T>>{col2im(g, image_shape, geom)};
                   });
}

template <typename T>
Tensor<T> col2im(const Tensor<T>& cols, const Shape& image_shape, const ConvGeometry& geom) {
  if (image_shape.size() != 4) throw std::invalid_argument("col2im: expected NHWC image shape");
  const std::size_t B = image_shape[0], H = image_shape[1], W = image_shape[2], C = image_shape[3];
  const std::size_t K = geom.kernel;
  const std::size_t Ho = geom.out_extent(H), Wo = geom.out_extent(W);
  const std::size_t width = K * K * C;
  if (cols.numel() != B * Ho * Wo * width) throw std::invalid_argument("col2im: column buffer size mismatch");
  std::vector<T> out(shape_numel(image_shape), T{0});
  const auto d = cols.data();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t oy = 0; oy < Ho; ++oy)
      for (std::size_t ox = 0; ox < Wo; ++ox) {
        const T* row = d.data() + ((b * Ho + oy) * Wo + ox) * width;
        for (std::size_t ky = 0; ky < K; ++ky) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * geom.stride + ky) -
                                    static_cast<std::ptrdiff_t>(geom.padding);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
          for (std::size_t kx = 0; kx < K; ++kx) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * geom.stride + kx) -
                                      static_cast<std::ptrdiff_t>(geom.padding);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
            T* dst = out.data() + ((b * H + iy) * W + ix) * C;
            const T* src = row + (ky * K + kx) * C;
            for (std::size_t c = 0; c < C; ++c) dst[c] += src[c];
          }
        }
      }
  return record<T>(image_shape, std::move(out), "col2im", {cols},
                   [geom](const Tensor<T>& g) { return std::vector<Tensor<T>>{im2col(g, geom)}; });
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, const ConvGeometry& geom) {
  if (weight.rank() != 4 || weight.dim(0) != geom.kernel || weight.dim(1) != geom.kernel ||
      weight.dim(2) != x.dim(3))
    throw std::invalid_argument("conv2d: weight shape " + shape_str(weight.shape()) + " does not match input " +
                                shape_str(x.shape()));
  const std::size_t B = x.dim(0);
  const std::size_t Ho = geom.out_extent(x.dim(1)), Wo = geom.out_extent(x.dim(2));
  const std::size_t cout = weight.dim(3);
  const auto cols = im2col(x, geom);
  auto y = matmul(cols, reshape(weight, Shape{weight.numel() / cout, cout}));
  y = add(y, bias);
  return reshape(y, Shape{B, Ho, Wo, cout});
}

#define CIPS3D_INSTANTIATE_OPS(T)                                                                   \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> div<T>(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> neg<T>(const Tensor<T>&);                                                       \
  template Tensor<T> scale<T>(const Tensor<T>&, T);                                                  \
  template Tensor<T> add_scalar<T>(const Tensor<T>&, T);                                             \
  template Tensor<T> sin<T>(const Tensor<T>&);                                                       \
  template Tensor<T> cos<T>(const Tensor<T>&);                                                       \
  template Tensor<T> exp<T>(const Tensor<T>&);                                                       \
  template Tensor<T> sqrt<T>(const Tensor<T>&);                                                      \
  template Tensor<T> square<T>(const Tensor<T>&);                                                    \
  template Tensor<T> leaky_relu<T>(const Tensor<T>&, T);                                             \
  template Tensor<T> softplus<T>(const Tensor<T>&);                                                  \
  template Tensor<T> sigmoid<T>(const Tensor<T>&);                                                   \
  template Tensor<T> sum<T>(const Tensor<T>&);                                                       \
  template Tensor<T> mean<T>(const Tensor<T>&);                                                      \
  template Tensor<T> sum_to<T>(const Tensor<T>&, const Shape&);                                      \
  template Tensor<T> broadcast_to<T>(const Tensor<T>&, const Shape&);                                \
  template Tensor<T> reshape<T>(const Tensor<T>&, const Shape&);                                     \
  template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&, bool, bool);                      \
  template Tensor<T> index_select_rows<T>(const Tensor<T>&, const std::vector<std::size_t>&);        \
  template Tensor<T> index_add_rows<T>(const Tensor<T>&, const std::vector<std::size_t>&, std::size_t); \
  template Tensor<T> slice_rows<T>(const Tensor<T>&, std::size_t, std::size_t);                      \
  template Tensor<T> concat_rows<T>(const std::vector<Tensor<T>>&);                                  \
  template Tensor<T> cumsum_exclusive<T>(const Tensor<T>&, bool);                                    \
  template Tensor<T> im2col<T>(const Tensor<T>&, const ConvGeometry&);                               \
  template Tensor<T> col2im<T>(const Tensor<T>&, const Shape&, const ConvGeometry&);                 \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const ConvGeometry&);

CIPS3D_INSTANTIATE_OPS(float)
CIPS3D_INSTANTIATE_OPS(double)

}  // namespace cips3d::ad
