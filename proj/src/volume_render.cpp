#include "cips3d/volume_render.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cips3d::render {

template <typename T>
ad::Tensor<T> interval_lengths(std::span<const double> depths, std::size_t rays, std::size_t samples, double far) {
  if (depths.size() != rays * samples) throw std::invalid_argument("interval_lengths: depth count mismatch");
  std::vector<T> deltas(depths.size());
  for (std::size_t r = 0; r < rays; ++r) {
    const double* t = depths.data() + r * samples;
    for (std::size_t s = 0; s < samples; ++s) {
      const double next = s + 1 < samples ? t[s + 1] : far;
      if (!(next > t[s]))
        throw std::invalid_argument("composite: depths must be strictly increasing and below the far bound (ray " +
                                    std::to_string(r) + ")");
      deltas[r * samples + s] = static_cast<T>(next - t[s]);
    }
  }
  return ad::Tensor<T>({rays, samples}, std::move(deltas));
}

template <typename T>
Composite<T> composite(const ad::Tensor<T>& sigma, const ad::Tensor<T>& features, const ad::Tensor<T>& deltas) {
  if (sigma.rank() != 2 || features.rank() != 3 || sigma.shape() != deltas.shape() ||
      features.dim(0) != sigma.dim(0) || features.dim(1) != sigma.dim(1))
    throw std::invalid_argument("composite: expected sigma [R,S], features [R,S,C], deltas [R,S]; got " +
                                ad::shape_str(sigma.shape()) + ", " + ad::shape_str(features.shape()) + ", " +
                                ad::shape_str(deltas.shape()));
  for (T s : sigma.data())
    if (!(s >= 0)) throw std::invalid_argument("composite: densities must be non-negative");

  const std::size_t rays = sigma.dim(0), samples = sigma.dim(1), channels = features.dim(2);
  const auto optical = ad::mul(sigma, deltas);
  const auto transmittance = ad::exp(ad::neg(ad::cumsum_exclusive(optical)));
  const auto alpha = ad::add_scalar(ad::neg(ad::exp(ad::neg(optical))), T{1});
  const auto weights = ad::mul(transmittance, alpha);
  const auto weighted = ad::mul(ad::reshape(weights, ad::Shape{rays, samples, 1}), features);
  const auto v = ad::reshape(ad::sum_to(weighted, ad::Shape{rays, 1, channels}), ad::Shape{rays, channels});
  return {v, weights, transmittance};
}

template ad::Tensor<float> interval_lengths<float>(std::span<const double>, std::size_t, std::size_t, double);
template ad::Tensor<double> interval_lengths<double>(std::span<const double>, std::size_t, std::size_t, double);
template Composite<float> composite<float>(const ad::Tensor<float>&, const ad::Tensor<float>&,
                                           const ad::Tensor<float>&);
template Composite<double> composite<double>(const ad::Tensor<double>&, const ad::Tensor<double>&,
                                             const ad::Tensor<double>&);

}  // namespace cips3d::render
