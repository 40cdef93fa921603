#pragma once

// Small convolutional discriminator: three 3x3 stride-2 convolutions with
// leaky_relu, global average pooling and a linear head to one logit.
// Channels are base, 2*base, 4*base. Images are NHWC [B, H, W, 3].

#include <cstddef>
#include <string>

#include "cips3d/ops.hpp"
#include "cips3d/params.hpp"
#include "cips3d/random.hpp"

namespace cips3d {

struct DiscriminatorConfig {
  std::string prefix = "disc";
  std::size_t base_channels = 32;
  std::size_t layers = 3;
  double slope = 0.2;

  std::size_t channels(std::size_t layer) const { return base_channels << layer; }
  bool operator==(const DiscriminatorConfig&) const = default;
};

inline DiscriminatorConfig main_discriminator() { return {"disc", 32, 3, 0.2}; }
inline DiscriminatorConfig aux_discriminator() { return {"disc_aux", 16, 3, 0.2}; }

template <typename T>
void add_discriminator(ParamSet<T>& params, const DiscriminatorConfig& cfg, Rng& rng);

template <typename T>
ParamSet<T> init_discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed);

/// images [B, H, W, 3] -> logits [B].
template <typename T>
ad::Tensor<T> discriminate(const ParamSet<T>& params, const DiscriminatorConfig& cfg, const ad::Tensor<T>& images);

}  // namespace cips3d
