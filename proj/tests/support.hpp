#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

#include "cips3d/generator.hpp"
#include "cips3d/ops.hpp"
#include "cips3d/random.hpp"

namespace cips3d::test {

template <typename T>
ad::Tensor<T> random_tensor(Rng& rng, const ad::Shape& shape, double lo = -1.0, double hi = 1.0,
                            bool requires_grad = false) {
  ad::Tensor<T> t(shape);
  for (auto& v : t.mutable_data()) v = static_cast<T>(uniform(rng, lo, hi));
  t.set_requires_grad(requires_grad);
  return t;
}

/// Same depth as the desk model, tiny widths.
inline GeneratorConfig tiny_generator() {
  GeneratorConfig c;
  c.dim_z_s = c.dim_w_s = 4;
  c.dim_z_a = c.dim_w_a = 4;
  c.mapping_layers = 2;
  c.nerf_hidden = 6;
  c.dim_v = 4;
  c.inr_width = 5;
  return c;
}

inline RenderSettings tiny_render() {
  RenderSettings s;
  s.samples = 4;
  return s;
}

/// Moves every parameter off its structured init (zero beta, unit style) so
/// that no gradient vanishes by construction.
template <typename T>
void perturb(ParamSet<T>& params, std::uint64_t seed, double scale = 0.05) {
  Rng rng = make_rng(seed, 99);
  for (const auto& name : params.names())
    for (auto& v : params.at(name).mutable_data()) v += static_cast<T>(uniform(rng, -scale, scale));
}

template <typename T>
double max_abs_diff(std::span<const T> a, std::span<const T> b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  return m;
}

template <typename T>
bool bit_equal(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::memcmp(&a[i], &b[i], sizeof(T)) != 0) return false;
  return true;
}

}  // namespace cips3d::test
