#include "cips3d/discriminator.hpp"

#include <cmath>
#include <stdexcept>

#include "cips3d/layers.hpp"

namespace cips3d {
namespace {

const ad::ConvGeometry kDown{3, 2, 1};

std::string conv_name(const DiscriminatorConfig& cfg, std::size_t i) {
  return cfg.prefix + ".conv" + std::to_string(i);
}

}  // namespace

template <typename T>
void add_discriminator(ParamSet<T>& params, const DiscriminatorConfig& cfg, Rng& rng) {
  if (cfg.layers == 0 || cfg.base_channels == 0) throw std::invalid_argument("discriminator needs layers and channels");
  const double gain = 6.0 / (1.0 + cfg.slope * cfg.slope);
  std::size_t in = 3;
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    const std::size_t out = cfg.channels(i);
    const double fan_in = static_cast<double>(kDown.kernel * kDown.kernel * in);
    params.add(conv_name(cfg, i) + ".weight",
               nn::uniform_tensor<T>({kDown.kernel, kDown.kernel, in, out}, std::sqrt(gain / fan_in), rng));
    params.add(conv_name(cfg, i) + ".bias", ad::Tensor<T>({out}));
    in = out;
  }
  nn::add_linear(params, cfg.prefix + ".head", in, 1, std::sqrt(3.0 / static_cast<double>(in)), rng);
}

template <typename T>
ParamSet<T> init_discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  ParamSet<T> params;
  add_discriminator(params, cfg, rng);
  return params;
}

template <typename T>
ad::Tensor<T> discriminate(const ParamSet<T>& params, const DiscriminatorConfig& cfg, const ad::Tensor<T>& images) {
  if (images.rank() != 4 || images.dim(3) != 3)
    throw std::invalid_argument("discriminate: images must be [B, H, W, 3], got " + ad::shape_str(images.shape()));
  const T slope = static_cast<T>(cfg.slope);
  ad::Tensor<T> h = images;
  for (std::size_t i = 0; i < cfg.layers; ++i)
    h = ad::leaky_relu(
        ad::conv2d(h, params.at(conv_name(cfg, i) + ".weight"), params.at(conv_name(cfg, i) + ".bias"), kDown), slope);
  const std::size_t batch = h.dim(0), channels = h.dim(3);
  const auto pooled = ad::scale(ad::reshape(ad::sum_to(h, ad::Shape{batch, 1, 1, channels}), ad::Shape{batch, channels}),
                                static_cast<T>(1.0 / static_cast<double>(h.dim(1) * h.dim(2))));
  return ad::reshape(nn::apply_linear(params, cfg.prefix + ".head", pooled), ad::Shape{batch});
}

#define CIPS3D_INSTANTIATE_DISC(T)                                                   \
  template void add_discriminator<T>(ParamSet<T>&, const DiscriminatorConfig&, Rng&); \
  template ParamSet<T> init_discriminator<T>(const DiscriminatorConfig&, std::uint64_t); \
  template ad::Tensor<T> discriminate<T>(const ParamSet<T>&, const DiscriminatorConfig&, const ad::Tensor<T>&);

CIPS3D_INSTANTIATE_DISC(float)
CIPS3D_INSTANTIATE_DISC(double)

}  // namespace cips3d
