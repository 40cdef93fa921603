#pragma once

// Shallow shape network: a learnable coordinate encoding (FC + sine), three
// FiLM-modulated SIREN blocks conditioned on w_s, and density / feature heads.
// The field depends on position and shape code only, never on view direction.

#include <vector>

#include "cips3d/model_config.hpp"
#include "cips3d/ops.hpp"
#include "cips3d/params.hpp"
#include "cips3d/random.hpp"

namespace cips3d::nerf {

/// Registers nerf.* (including the nerf.to_rgb head) and map_s.*.
template <typename T>
void add_params(ParamSet<T>& params, const GeneratorConfig& cfg, Rng& rng);

template <typename T>
struct Film {
  std::vector<ad::Tensor<T>> gamma;  // per block, [B, hidden]
  std::vector<ad::Tensor<T>> beta;
};

/// w_s = m_s(z_s) for z_s [B, dim_z_s].
template <typename T>
ad::Tensor<T> map_shape_code(const ParamSet<T>& params, const GeneratorConfig& cfg, const ad::Tensor<T>& z_s);

/// gamma = 1 + affine(w_s), beta = affine(w_s), one pair per block.
template <typename T>
Film<T> film_from_style(const ParamSet<T>& params, const GeneratorConfig& cfg, const ad::Tensor<T>& w_s);

/// sin(gamma * (x W + b) + beta) with x [B, P, in] and gamma, beta [B, out].
template <typename T>
ad::Tensor<T> film_siren_block(const ad::Tensor<T>& x, const ad::Tensor<T>& gamma, const ad::Tensor<T>& beta,
                               const ad::Tensor<T>& weight, const ad::Tensor<T>& bias);

template <typename T>
struct Field {
  ad::Tensor<T> sigma;     // [B, P], >= 0
  ad::Tensor<T> features;  // [B, P, dim_v]
};

/// Evaluates the field at points [B, P, 3]. Throws on non-finite coordinates.
template <typename T>
Field<T> forward(const ParamSet<T>& params, const GeneratorConfig& cfg, const ad::Tensor<T>& points,
                 const Film<T>& film);

/// Per-pixel affine map dim_v -> 3 feeding the auxiliary discriminator.
template <typename T>
ad::Tensor<T> to_rgb(const ParamSet<T>& params, const ad::Tensor<T>& features);

}  // namespace cips3d::nerf
