#include "cips3d/surgery.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "cips3d/inr.hpp"

namespace cips3d::surgery {

bool is_shape_param(std::string_view name) {
  const auto ns = name_space(name);
  return ns == "nerf" || ns == "map_s";
}

bool is_appearance_param(std::string_view name) {
  const auto ns = name_space(name);
  return ns == "inr" || ns == "map_a";
}

template <typename T>
void freeze_nerf(ParamSet<T>& params) {
  for (const auto& name : params.names()) {
    if (is_shape_param(name)) params.set_trainable(name, false);
    else if (is_appearance_param(name)) params.set_trainable(name, true);
  }
}

template <typename T>
void require_compatible(const ParamSet<T>& base, const ParamSet<T>& transferred, double tolerance) {
  if (!base.same_layout(transferred))
    throw std::invalid_argument("surgery: models have different parameter names or shapes");
  for (const auto& [name, entry] : base.entries()) {
    if (!is_shape_param(name)) continue;
    const auto a = entry.tensor.data();
    const auto b = transferred.at(name).data();
    for (std::size_t i = 0; i < a.size(); ++i) {
      const bool same = tolerance == 0.0 ? a[i] == b[i]
                                         : std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])) <= tolerance;
      if (!same)
        throw std::invalid_argument("surgery: NeRF weights differ at " + name + "[" + std::to_string(i) + "]: " +
                                    std::to_string(static_cast<double>(a[i])) + " vs " +
                                    std::to_string(static_cast<double>(b[i])));
    }
  }
}

template <typename T>
ParamSet<T> interpolate_inr(const ParamSet<T>& base, const ParamSet<T>& transferred, double alpha, double tolerance) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("interpolate_inr: alpha must lie in [0, 1]");
  require_compatible(base, transferred, tolerance);
  auto out = base.clone();
  for (const auto& name : out.names()) {
    if (!is_appearance_param(name)) continue;
    auto dst = out.at(name).mutable_data();
    const auto src = transferred.at(name).data();
    for (std::size_t i = 0; i < dst.size(); ++i)
      dst[i] = static_cast<T>((1.0 - alpha) * static_cast<double>(dst[i]) + alpha * static_cast<double>(src[i]));
  }
  return out;
}

template <typename T>
std::size_t inr_block_count(const ParamSet<T>& params) {
  std::size_t n = 0;
  while (params.contains(inr::layer_prefix(n, "fc0") + ".weight")) ++n;
  return n;
}

template <typename T>
ParamSet<T> swap_layers(const ParamSet<T>& base, const ParamSet<T>& transferred, std::size_t from_block,
                        double tolerance) {
  const std::size_t blocks = inr_block_count(base);
  if (from_block > blocks)
    throw std::out_of_range("swap_layers: from_block " + std::to_string(from_block) + " outside [0, " +
                            std::to_string(blocks) + "]");
  require_compatible(base, transferred, tolerance);
  ParamSet<T> out;
  for (const auto& [name, entry] : base.entries()) {
    bool take = from_block < blocks && name_space(name) == "map_a";
    for (std::size_t b = from_block; b < blocks && !take; ++b) take = name.starts_with(inr::layer_prefix(b, ""));
    out.add(name, (take ? transferred.at(name) : entry.tensor).clone(), entry.trainable);
  }
  return out;
}

#define CIPS3D_INSTANTIATE_SURGERY(T)                                                                      \
  template void freeze_nerf<T>(ParamSet<T>&);                                                              \
  template void require_compatible<T>(const ParamSet<T>&, const ParamSet<T>&, double);                     \
  template ParamSet<T> interpolate_inr<T>(const ParamSet<T>&, const ParamSet<T>&, double, double);         \
  template ParamSet<T> swap_layers<T>(const ParamSet<T>&, const ParamSet<T>&, std::size_t, double);        \
  template std::size_t inr_block_count<T>(const ParamSet<T>&);

CIPS3D_INSTANTIATE_SURGERY(float)
CIPS3D_INSTANTIATE_SURGERY(double)

}  // namespace cips3d::surgery
