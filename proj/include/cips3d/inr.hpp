#pragma once

// Deep appearance network. Each pixel's composited feature vector goes
// through `inr_blocks` blocks of two ModFC + leaky_relu layers; after every
// block a tRGB head (ModFC without demodulation) maps to 3 channels, and the
// image is the plain sum of all tRGB outputs. Pixels never interact.
//
// Parameter names: inr.block{i}.fc{0,1}.* and inr.block{i}.trgb.*, each with
// weight, bias, style.weight and style.bias; plus map_a.* for the mapping.

#include <string>

#include "cips3d/model_config.hpp"
#include "cips3d/ops.hpp"
#include "cips3d/params.hpp"
#include "cips3d/random.hpp"

namespace cips3d::inr {

template <typename T>
void add_params(ParamSet<T>& params, const GeneratorConfig& cfg, Rng& rng);

/// w_a = m_a(z_a) for z_a [B, dim_z_a].
template <typename T>
ad::Tensor<T> map_appearance_code(const ParamSet<T>& params, const GeneratorConfig& cfg, const ad::Tensor<T>& z_a);

/// features [B, n, dim_v], w_a [B, dim_w_a] -> rgb [B, n, 3].
template <typename T>
ad::Tensor<T> forward(const ParamSet<T>& params, const GeneratorConfig& cfg, const ad::Tensor<T>& features,
                      const ad::Tensor<T>& w_a);

std::string layer_prefix(std::size_t block, const std::string& layer);

}  // namespace cips3d::inr
