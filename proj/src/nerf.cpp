#include "cips3d/nerf.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "cips3d/layers.hpp"

namespace cips3d::nerf {
namespace {
std::string block(std::size_t i) { return "nerf.block" + std::to_string(i); }
}  // namespace

template <typename T>
void add_params(ParamSet<T>& params, const GeneratorConfig& cfg, Rng& rng) {
  nn::add_mapping(params, "map_s", cfg.shape_mapping(), rng);

  const std::size_t hidden = cfg.nerf_hidden;
  // SIREN init: the encoding layer sees raw coordinates scaled by omega0 in
  // the forward pass; hidden layers use the sqrt(6/fan_in) bound.
  params.add("nerf.pe.weight", nn::uniform_tensor<T>({3, hidden}, 1.0 / 3.0, rng));
  params.add("nerf.pe.bias", nn::uniform_tensor<T>({hidden}, 1.0 / std::sqrt(3.0), rng));
  const double hidden_bound = std::sqrt(6.0 / static_cast<double>(hidden));
  const double film_bound = 0.25 / std::sqrt(static_cast<double>(cfg.dim_w_s));
  for (std::size_t i = 0; i < cfg.nerf_blocks; ++i) {
    params.add(block(i) + ".fc.weight", nn::uniform_tensor<T>({hidden, hidden}, hidden_bound, rng));
    params.add(block(i) + ".fc.bias",
               nn::uniform_tensor<T>({hidden}, 1.0 / std::sqrt(static_cast<double>(hidden)), rng));
    nn::add_linear(params, block(i) + ".gamma", cfg.dim_w_s, hidden, film_bound, rng);
    params.add(block(i) + ".beta.weight", ad::Tensor<T>({cfg.dim_w_s, hidden}));
    params.add(block(i) + ".beta.bias", ad::Tensor<T>({hidden}));
  }
  nn::add_linear(params, "nerf.sigma", hidden, 1, hidden_bound, rng);
  nn::add_linear(params, "nerf.feature", hidden, cfg.dim_v, hidden_bound, rng);
  nn::add_linear(params, "nerf.to_rgb", cfg.dim_v, 3, std::sqrt(3.0 / static_cast<double>(cfg.dim_v)), rng);
}

template <typename T>
ad::Tensor<T> map_shape_code(const ParamSet<T>& params, const GeneratorConfig& cfg, const ad::Tensor<T>& z_s) {
  return nn::map_code(params, "map_s", cfg.shape_mapping(), z_s);
}

template <typename T>
Film<T> film_from_style(const ParamSet<T>& params, const GeneratorConfig& cfg, const ad::Tensor<T>& w_s) {
  Film<T> film;
  for (std::size_t i = 0; i < cfg.nerf_blocks; ++i) {
    film.gamma.push_back(ad::add_scalar(nn::apply_linear(params, block(i) + ".gamma", w_s), T{1}));
    film.beta.push_back(nn::apply_linear(params, block(i) + ".beta", w_s));
  }
  return film;
}

template <typename T>
ad::Tensor<T> film_siren_block(const ad::Tensor<T>& x, const ad::Tensor<T>& gamma, const ad::Tensor<T>& beta,
                               const ad::Tensor<T>& weight, const ad::Tensor<T>& bias) {
  if (x.rank() != 3) throw std::invalid_argument("film_siren_block: expected [B, P, in] input");
  const std::size_t batch = x.dim(0);
  const std::size_t out = weight.dim(1);
  const ad::Shape per_batch{batch, 1, out};
  const auto h = nn::linear(x, weight, bias);
  return ad::sin(ad::add(ad::mul(h, ad::reshape(gamma, per_batch)), ad::reshape(beta, per_batch)));
}

template <typename T>
Field<T> forward(const ParamSet<T>& params, const GeneratorConfig& cfg, const ad::Tensor<T>& points,
                 const Film<T>& film) {
  if (points.rank() != 3 || points.dim(2) != 3)
    throw std::invalid_argument("nerf::forward: points must be [B, P, 3], got " + ad::shape_str(points.shape()));
  for (T v : points.data())
    if (!std::isfinite(static_cast<double>(v))) throw std::invalid_argument("nerf::forward: non-finite coordinate");
  if (film.gamma.size() != cfg.nerf_blocks) throw std::invalid_argument("nerf::forward: FiLM block count mismatch");

  auto h = nn::apply_linear(params, "nerf.pe", points);
  h = ad::sin(ad::scale(h, static_cast<T>(cfg.omega0)));
  for (std::size_t i = 0; i < cfg.nerf_blocks; ++i)
    h = film_siren_block(h, film.gamma[i], film.beta[i], params.at(block(i) + ".fc.weight"),
                         params.at(block(i) + ".fc.bias"));

  const std::size_t batch = points.dim(0);
  const std::size_t count = points.dim(1);
  Field<T> field;
  field.sigma = ad::reshape(ad::softplus(nn::apply_linear(params, "nerf.sigma", h)), ad::Shape{batch, count});
  field.features = nn::apply_linear(params, "nerf.feature", h);
  return field;
}

template <typename T>
ad::Tensor<T> to_rgb(const ParamSet<T>& params, const ad::Tensor<T>& features) {
  return nn::apply_linear(params, "nerf.to_rgb", features);
}

#define CIPS3D_INSTANTIATE_NERF(T)                                                                               \
  template void add_params<T>(ParamSet<T>&, const GeneratorConfig&, Rng&);                                       \
  template ad::Tensor<T> map_shape_code<T>(const ParamSet<T>&, const GeneratorConfig&, const ad::Tensor<T>&);    \
  template Film<T> film_from_style<T>(const ParamSet<T>&, const GeneratorConfig&, const ad::Tensor<T>&);         \
  template ad::Tensor<T> film_siren_block<T>(const ad::Tensor<T>&, const ad::Tensor<T>&, const ad::Tensor<T>&,   \
                                             const ad::Tensor<T>&, const ad::Tensor<T>&);                        \
  template Field<T> forward<T>(const ParamSet<T>&, const GeneratorConfig&, const ad::Tensor<T>&, const Film<T>&); \
  template ad::Tensor<T> to_rgb<T>(const ParamSet<T>&, const ad::Tensor<T>&);

CIPS3D_INSTANTIATE_NERF(float)
CIPS3D_INSTANTIATE_NERF(double)

}  // namespace cips3d::nerf
