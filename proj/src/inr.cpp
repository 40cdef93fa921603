#include "cips3d/inr.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cips3d/layers.hpp"
#include "cips3d/modfc.hpp"

namespace cips3d::inr {
namespace {

// The style affine starts at S = 1 (weight 0, bias 1): an unmodulated layer.
template <typename T>
void add_modulated(ParamSet<T>& params, const std::string& prefix, std::size_t in, std::size_t out,
                   std::size_t dim_w, double bound, Rng& rng) {
  nn::add_linear(params, prefix, in, out, bound, rng);
  params.add(prefix + ".style.weight", ad::Tensor<T>({dim_w, in}));
  params.add(prefix + ".style.bias", ad::Tensor<T>({in}, T{1}));
}

template <typename T>
ad::Tensor<T> apply_modulated(const ParamSet<T>& params, const std::string& prefix, const ad::Tensor<T>& x,
                              const ad::Tensor<T>& w_a, bool demod, T eps) {
  const auto style = nn::apply_linear(params, prefix + ".style", w_a);
  return modfc::modfc(x, params.at(prefix + ".weight"), params.at(prefix + ".bias"), style, demod, eps);
}

}  // namespace

std::string layer_prefix(std::size_t block, const std::string& layer) {
  return "inr.block" + std::to_string(block) + "." + layer;
}

template <typename T>
void add_params(ParamSet<T>& params, const GeneratorConfig& cfg, Rng& rng) {
  nn::add_mapping(params, "map_a", cfg.appearance_mapping(), rng);
  const std::size_t width = cfg.inr_width;
  // tRGB heads are scaled so the summed image starts near unit variance.
  const double trgb_scale = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(cfg.inr_blocks, 1)));
  for (std::size_t b = 0; b < cfg.inr_blocks; ++b) {
    const std::size_t in0 = b == 0 ? cfg.dim_v : width;
    add_modulated(params, layer_prefix(b, "fc0"), in0, width, cfg.dim_w_a, std::sqrt(3.0 / static_cast<double>(in0)), rng);
    add_modulated(params, layer_prefix(b, "fc1"), width, width, cfg.dim_w_a, std::sqrt(3.0 / static_cast<double>(width)), rng);
    add_modulated(params, layer_prefix(b, "trgb"), width, 3, cfg.dim_w_a,
                  trgb_scale * std::sqrt(3.0 / static_cast<double>(width)), rng);
  }
}

template <typename T>
ad::Tensor<T> map_appearance_code(const ParamSet<T>& params, const GeneratorConfig& cfg, const ad::Tensor<T>& z_a) {
  return nn::map_code(params, "map_a", cfg.appearance_mapping(), z_a);
}

template <typename T>
ad::Tensor<T> forward(const ParamSet<T>& params, const GeneratorConfig& cfg, const ad::Tensor<T>& features,
                      const ad::Tensor<T>& w_a) {
  if (features.rank() != 3 || features.dim(2) != cfg.dim_v)
    throw std::invalid_argument("inr::forward: features must be [B, n, " + std::to_string(cfg.dim_v) + "], got " +
                                ad::shape_str(features.shape()));
  if (w_a.rank() != 2 || w_a.dim(0) != features.dim(0) || w_a.dim(1) != cfg.dim_w_a)
    throw std::invalid_argument("inr::forward: w_a must be [B, dim_w_a]");
  const T eps = static_cast<T>(cfg.demod_eps);
  const T slope = static_cast<T>(cfg.lrelu_slope);
  const T gain = static_cast<T>(std::numbers::sqrt2);
  ad::Tensor<T> h = features;
  ad::Tensor<T> rgb;
  for (std::size_t b = 0; b < cfg.inr_blocks; ++b) {
    for (const char* layer : {"fc0", "fc1"})
      h = ad::scale(ad::leaky_relu(apply_modulated(params, layer_prefix(b, layer), h, w_a, true, eps), slope), gain);
    const auto out = apply_modulated(params, layer_prefix(b, "trgb"), h, w_a, false, eps);
    rgb = rgb.defined() ? ad::add(rgb, out) : out;
  }
  return rgb;
}

#define CIPS3D_INSTANTIATE_INR(T)                                                                                   \
  template void add_params<T>(ParamSet<T>&, const GeneratorConfig&, Rng&);                                          \
  template ad::Tensor<T> map_appearance_code<T>(const ParamSet<T>&, const GeneratorConfig&, const ad::Tensor<T>&);  \
  template ad::Tensor<T> forward<T>(const ParamSet<T>&, const GeneratorConfig&, const ad::Tensor<T>&,               \
                                    const ad::Tensor<T>&);

CIPS3D_INSTANTIATE_INR(float)
CIPS3D_INSTANTIATE_INR(double)

}  // namespace cips3d::inr
