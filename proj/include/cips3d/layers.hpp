#pragma once

// Fully connected building blocks shared by the generator and discriminators.

#include <cstddef>
#include <string>

#include "cips3d/ops.hpp"
#include "cips3d/params.hpp"
#include "cips3d/random.hpp"

namespace cips3d::nn {

/// Uniform in [-bound, bound].
template <typename T>
ad::Tensor<T> uniform_tensor(const ad::Shape& shape, double bound, Rng& rng);

/// x[..., in] * weight[in, out] + bias[out].
template <typename T>
ad::Tensor<T> linear(const ad::Tensor<T>& x, const ad::Tensor<T>& weight, const ad::Tensor<T>& bias);

/// Registers `<prefix>.weight` [in, out] ~ U(+-weight_bound) and `<prefix>.bias`
/// [out] filled with `bias_fill`.
template <typename T>
void add_linear(ParamSet<T>& params, const std::string& prefix, std::size_t in, std::size_t out,
                double weight_bound, Rng& rng, double bias_fill = 0.0);

template <typename T>
ad::Tensor<T> apply_linear(const ParamSet<T>& params, const std::string& prefix, const ad::Tensor<T>& x);

struct MappingConfig {
  std::size_t dim_z = 128;
  std::size_t dim_w = 128;
  std::size_t layers = 3;
  double slope = 0.2;
};

/// StyleGAN-style mapping MLP: leaky_relu after every layer but the last.
template <typename T>
void add_mapping(ParamSet<T>& params, const std::string& prefix, const MappingConfig& cfg, Rng& rng);

/// z [B, dim_z] -> w [B, dim_w].
template <typename T>
ad::Tensor<T> map_code(const ParamSet<T>& params, const std::string& prefix, const MappingConfig& cfg,
                       const ad::Tensor<T>& z);

}  // namespace cips3d::nn
