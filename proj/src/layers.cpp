#include "cips3d/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace cips3d::nn {

template <typename T>
ad::Tensor<T> uniform_tensor(const ad::Shape& shape, double bound, Rng& rng) {
  ad::Tensor<T> t(shape);
  for (auto& v : t.mutable_data()) v = static_cast<T>(uniform(rng, -bound, bound));
  return t;
}

template <typename T>
ad::Tensor<T> linear(const ad::Tensor<T>& x, const ad::Tensor<T>& weight, const ad::Tensor<T>& bias) {
  const std::size_t in = weight.dim(0);
  const std::size_t out = weight.dim(1);
  if (x.rank() == 0 || x.dim(x.rank() - 1) != in)
    throw std::invalid_argument("linear: input " + ad::shape_str(x.shape()) + " vs weight " +
                                ad::shape_str(weight.shape()));
  ad::Shape out_shape = x.shape();
  out_shape.back() = out;
  const auto flat = x.rank() == 2 ? x : ad::reshape(x, ad::Shape{x.numel() / in, in});
  auto y = ad::add(ad::matmul(flat, weight), bias);
  return x.rank() == 2 ? y : ad::reshape(y, out_shape);
}

template <typename T>
void add_linear(ParamSet<T>& params, const std::string& prefix, std::size_t in, std::size_t out,
                double weight_bound, Rng& rng, double bias_fill) {
  params.add(prefix + ".weight", uniform_tensor<T>({in, out}, weight_bound, rng));
  params.add(prefix + ".bias", ad::Tensor<T>({out}, static_cast<T>(bias_fill)));
}

template <typename T>
ad::Tensor<T> apply_linear(const ParamSet<T>& params, const std::string& prefix, const ad::Tensor<T>& x) {
  return linear(x, params.at(prefix + ".weight"), params.at(prefix + ".bias"));
}

template <typename T>
void add_mapping(ParamSet<T>& params, const std::string& prefix, const MappingConfig& cfg, Rng& rng) {
  if (cfg.layers == 0) throw std::invalid_argument("mapping network needs at least one layer");
  std::size_t in = cfg.dim_z;
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    const double bound = std::sqrt(6.0 / ((1.0 + cfg.slope * cfg.slope) * static_cast<double>(in)));
    add_linear(params, prefix + ".fc" + std::to_string(i), in, cfg.dim_w, bound, rng);
    in = cfg.dim_w;
  }
}

template <typename T>
ad::Tensor<T> map_code(const ParamSet<T>& params, const std::string& prefix, const MappingConfig& cfg,
                       const ad::Tensor<T>& z) {
  if (z.rank() != 2 || z.dim(1) != cfg.dim_z)
    throw std::invalid_argument(prefix + ": latent must be [B, " + std::to_string(cfg.dim_z) + "], got " +
                                ad::shape_str(z.shape()));
  ad::Tensor<T> h = z;
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    h = apply_linear(params, prefix + ".fc" + std::to_string(i), h);
    if (i + 1 < cfg.layers) h = ad::leaky_relu(h, static_cast<T>(cfg.slope));
  }
  return h;
}

#define CIPS3D_INSTANTIATE_LAYERS(T)                                                                          \
  template ad::Tensor<T> uniform_tensor<T>(const ad::Shape&, double, Rng&);                                   \
  template ad::Tensor<T> linear<T>(const ad::Tensor<T>&, const ad::Tensor<T>&, const ad::Tensor<T>&);         \
  template void add_linear<T>(ParamSet<T>&, const std::string&, std::size_t, std::size_t, double, Rng&, double); \
  template ad::Tensor<T> apply_linear<T>(const ParamSet<T>&, const std::string&, const ad::Tensor<T>&);       \
  template void add_mapping<T>(ParamSet<T>&, const std::string&, const MappingConfig&, Rng&);                 \
  template ad::Tensor<T> map_code<T>(const ParamSet<T>&, const std::string&, const MappingConfig&,           \
                                     const ad::Tensor<T>&);

CIPS3D_INSTANTIATE_LAYERS(float)
CIPS3D_INSTANTIATE_LAYERS(double)

}  // namespace cips3d::nn
