#include "cips3d/modfc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "cips3d/random.hpp"

namespace cips3d::modfc {
namespace {

Dims check_shapes(const ad::Shape& x, const ad::Shape& w, const ad::Shape& bias, const ad::Shape& style) {
  if (x.size() != 3 || w.size() != 2 || bias.size() != 1 || style.size() != 2 || x[2] != w[0] ||
      bias[0] != w[1] || style[0] != x[0] || style[1] != w[0])
    throw std::invalid_argument("modfc: expected x [b,n,d_in], weight [d_in,d_out], bias [d_out], style [b,d_in]; got " +
                                ad::shape_str(x) + ", " + ad::shape_str(w) + ", " + ad::shape_str(bias) + ", " +
                                ad::shape_str(style));
  return {x[0], x[1], w[0], w[1]};
}

}  // namespace

template <typename T>
void modfc_reference(std::span<const T> x, std::span<const T> weight, std::span<const T> bias,
                     std::span<const T> style, const Dims& d, bool demod, T eps, std::span<T> y) {
  if (x.size() != d.batch * d.seq * d.in || weight.size() != d.in * d.out || bias.size() != d.out ||
      style.size() != d.batch * d.in || y.size() != d.batch * d.seq * d.out)
    throw std::invalid_argument("modfc_reference: buffer sizes do not match dims");
  std::vector<T> w2(d.in * d.out);
  std::vector<T> norm(d.out);
  for (std::size_t k = 0; k < d.batch; ++k) {
    for (std::size_t i = 0; i < d.in; ++i)
      for (std::size_t o = 0; o < d.out; ++o) w2[i * d.out + o] = weight[i * d.out + o] * style[k * d.in + i];
    if (demod) {
      std::fill(norm.begin(), norm.end(), T{0});
      for (std::size_t i = 0; i < d.in; ++i)
        for (std::size_t o = 0; o < d.out; ++o) norm[o] += w2[i * d.out + o] * w2[i * d.out + o];
      for (std::size_t o = 0; o < d.out; ++o) norm[o] = std::sqrt(norm[o] + eps);
      for (std::size_t i = 0; i < d.in; ++i)
        for (std::size_t o = 0; o < d.out; ++o) w2[i * d.out + o] /= norm[o];
    }
    for (std::size_t r = 0; r < d.seq; ++r) {
      const T* xr = x.data() + (k * d.seq + r) * d.in;
      T* yr = y.data() + (k * d.seq + r) * d.out;
      std::fill(yr, yr + d.out, T{0});
      for (std::size_t i = 0; i < d.in; ++i) {
        const T xv = xr[i];
        const T* wr = w2.data() + i * d.out;
        for (std::size_t o = 0; o < d.out; ++o) yr[o] += xv * wr[o];
      }
      for (std::size_t o = 0; o < d.out; ++o) yr[o] += bias[o];
    }
  }
}

template <typename T>
ad::Tensor<T> modfc_reference(const ad::Tensor<T>& x, const ad::Tensor<T>& weight, const ad::Tensor<T>& bias,
                              const ad::Tensor<T>& style, bool demod, T eps) {
  const Dims d = check_shapes(x.shape(), weight.shape(), bias.shape(), style.shape());
  ad::Tensor<T> y({d.batch, d.seq, d.out});
  modfc_reference<T>(x.data(), weight.data(), bias.data(), style.data(), d, demod, eps, y.mutable_data());
  return y;
}

template <typename T>
ad::Tensor<T> modfc(const ad::Tensor<T>& x, const ad::Tensor<T>& weight, const ad::Tensor<T>& bias,
                    const ad::Tensor<T>& style, bool demod, T eps) {
  const Dims d = check_shapes(x.shape(), weight.shape(), bias.shape(), style.shape());
  // W [1, d_in, d_out] (x) S [b, d_in, 1] -> W' [b, d_in, d_out]
  auto w = ad::mul(ad::reshape(weight, ad::Shape{1, d.in, d.out}), ad::reshape(style, ad::Shape{d.batch, d.in, 1}));
  if (demod) {
    const auto norm = ad::sqrt(ad::add_scalar(ad::sum_to(ad::square(w), ad::Shape{d.batch, 1, d.out}), eps));
    w = ad::div(w, norm);
  }
  return ad::add(ad::matmul(x, w), bias);
}

BenchResult benchmark(const Dims& dims, std::size_t iters, std::size_t warmup, std::uint64_t seed) {
  if (dims.batch == 0 || dims.seq == 0 || dims.in == 0 || dims.out == 0 || iters == 0)
    throw std::invalid_argument("modfc benchmark: sizes and iteration count must be positive");
  Rng rng = make_rng(seed);
  auto fill = [&](ad::Shape shape, double lo, double hi) {
    ad::Tensor<float> t(std::move(shape));
    for (auto& v : t.mutable_data()) v = static_cast<float>(uniform(rng, lo, hi));
    return t;
  };
  const auto x = fill({dims.batch, dims.seq, dims.in}, -1, 1);
  const auto w = fill({dims.in, dims.out}, -1, 1);
  const auto bias = fill({dims.out}, -1, 1);
  const auto style = fill({dims.batch, dims.in}, 0.5, 1.5);
  const float eps = 1e-8f;

  ad::NoGradGuard no_grad;
  using clock = std::chrono::steady_clock;
  ad::Tensor<float> y_ref({dims.batch, dims.seq, dims.out});
  for (std::size_t i = 0; i < warmup; ++i)
    modfc_reference<float>(x.data(), w.data(), bias.data(), style.data(), dims, true, eps, y_ref.mutable_data());
  auto t0 = clock::now();
  for (std::size_t i = 0; i < iters; ++i)
    modfc_reference<float>(x.data(), w.data(), bias.data(), style.data(), dims, true, eps, y_ref.mutable_data());
  const double ref_s = std::chrono::duration<double>(clock::now() - t0).count();

  ad::Tensor<float> y_eff;
  for (std::size_t i = 0; i < warmup; ++i) y_eff = modfc(x, w, bias, style, true, eps);
  t0 = clock::now();
  for (std::size_t i = 0; i < iters; ++i) y_eff = modfc(x, w, bias, style, true, eps);
  const double eff_s = std::chrono::duration<double>(clock::now() - t0).count();

  BenchResult r;
  r.dims = dims;
  r.iters = iters;
  r.reference_batches_per_s = static_cast<double>(iters) / ref_s;
  r.efficient_batches_per_s = static_cast<double>(iters) / eff_s;
  r.speedup = r.efficient_batches_per_s / r.reference_batches_per_s;
  for (std::size_t i = 0; i < y_ref.numel(); ++i)
    r.max_abs_diff = std::max(r.max_abs_diff, std::abs(static_cast<double>(y_ref.data()[i] - y_eff.data()[i])));
  return r;
}

#define CIPS3D_INSTANTIATE_MODFC(T)                                                                              \
  template void modfc_reference<T>(std::span<const T>, std::span<const T>, std::span<const T>, std::span<const T>, \
                                   const Dims&, bool, T, std::span<T>);                                          \
  template ad::Tensor<T> modfc_reference<T>(const ad::Tensor<T>&, const ad::Tensor<T>&, const ad::Tensor<T>&,    \
                                            const ad::Tensor<T>&, bool, T);                                      \
  template ad::Tensor<T> modfc<T>(const ad::Tensor<T>&, const ad::Tensor<T>&, const ad::Tensor<T>&,              \
                                  const ad::Tensor<T>&, bool, T);

CIPS3D_INSTANTIATE_MODFC(float)
CIPS3D_INSTANTIATE_MODFC(double)

}  // namespace cips3d::modfc
