#pragma once

// Weight-space operations between a base generator and a copy fine-tuned
// from it with the NeRF branch frozen.

#include <cstddef>
#include <string_view>

#include "cips3d/params.hpp"

namespace cips3d::surgery {

/// nerf.* and map_s.* belong to the shape branch; inr.* and map_a.* to appearance.
bool is_shape_param(std::string_view name);
bool is_appearance_param(std::string_view name);

/// Marks the shape branch not trainable and the appearance branch trainable.
template <typename T>
void freeze_nerf(ParamSet<T>& params);

/// Throws unless layouts match and every shape-branch tensor agrees: bitwise
/// when `tolerance` is 0, else within `tolerance` absolute.
template <typename T>
void require_compatible(const ParamSet<T>& base, const ParamSet<T>& transferred, double tolerance = 0.0);

/// Appearance branch (1 - alpha) * base + alpha * transferred; shape branch
/// copied from base.
template <typename T>
ParamSet<T> interpolate_inr(const ParamSet<T>& base, const ParamSet<T>& transferred, double alpha,
                            double tolerance = 0.0);

/// inr.block{i}.* for i >= from_block from `transferred`, the rest from base.
/// map_a.* comes from `transferred` whenever at least one block is swapped.
template <typename T>
ParamSet<T> swap_layers(const ParamSet<T>& base, const ParamSet<T>& transferred, std::size_t from_block,
                        double tolerance = 0.0);

/// Number of inr.block{i} groups present.
template <typename T>
std::size_t inr_block_count(const ParamSet<T>& params);

}  // namespace cips3d::surgery
