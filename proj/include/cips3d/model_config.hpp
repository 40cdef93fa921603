#pragma once

#include <cstddef>

#include "cips3d/layers.hpp"

namespace cips3d {

/// Generator architecture. Defaults are the desk-scale sizes; the full model
/// uses much wider layers but the same depth.
struct GeneratorConfig {
  std::size_t dim_z_s = 128;
  std::size_t dim_w_s = 128;
  std::size_t dim_z_a = 128;
  std::size_t dim_w_a = 128;
  std::size_t mapping_layers = 3;

  std::size_t nerf_hidden = 64;
  std::size_t nerf_blocks = 3;
  std::size_t dim_v = 32;
  /// Frequency scale of the coordinate-encoding sine layer.
  double omega0 = 30.0;

  std::size_t inr_width = 64;
  std::size_t inr_blocks = 9;
  double demod_eps = 1e-8;
  double lrelu_slope = 0.2;

  nn::MappingConfig shape_mapping() const { return {dim_z_s, dim_w_s, mapping_layers, lrelu_slope}; }
  nn::MappingConfig appearance_mapping() const { return {dim_z_a, dim_w_a, mapping_layers, lrelu_slope}; }

  bool operator==(const GeneratorConfig&) const = default;
};

}  // namespace cips3d
