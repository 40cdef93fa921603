#pragma once

// Full generator: shape/appearance codes -> NeRF field along camera rays ->
// composited feature per pixel -> INR -> RGB, plus the NeRF-branch RGB used
// by the auxiliary discriminator.

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

#include "cips3d/camera.hpp"
#include "cips3d/model_config.hpp"
#include "cips3d/nerf.hpp"
#include "cips3d/ops.hpp"
#include "cips3d/params.hpp"

namespace cips3d {

struct RenderSettings {
  double fov = 12.0 * std::numbers::pi / 180.0;
  double near = 0.88;
  double far = 1.12;
  std::size_t samples = 12;

  bool operator==(const RenderSettings&) const = default;
};

template <typename T>
ParamSet<T> init_generator(const GeneratorConfig& cfg, std::uint64_t seed);

/// Recovers the architecture from tensor shapes. omega0, demod_eps and the
/// leaky_relu slope are not stored and come from `base`. Throws if the names
/// and shapes are not exactly those of a generator with the inferred config.
template <typename T>
GeneratorConfig infer_config(const ParamSet<T>& params, const GeneratorConfig& base = {});

/// [rows, dim] of standard normal draws.
template <typename T>
ad::Tensor<T> sample_latent(Rng& rng, std::size_t rows, std::size_t dim);

template <typename T>
struct Styles {
  ad::Tensor<T> w_s;
  nerf::Film<T> film;
  ad::Tensor<T> w_a;
};

template <typename T>
Styles<T> compute_styles(const ParamSet<T>& params, const GeneratorConfig& cfg, const ad::Tensor<T>& z_s,
                         const ad::Tensor<T>& z_a);

/// One RaySamples per pose. With no rng, depths sit at bin midpoints.
std::vector<RaySamples> cast_rays(const std::vector<CameraPose>& poses, std::size_t height, std::size_t width,
                                  const RenderSettings& settings, Rng* rng);

template <typename T>
struct PixelRender {
  ad::Tensor<T> rgb;  // [B, P, 3]
  ad::Tensor<T> aux;  // [B, P, 3]
};

/// Renders pixels[b] of image b for every batch item. All lists must have the
/// same length P >= 1. Each pixel only depends on its own ray.
template <typename T>
PixelRender<T> render_pixels(const ParamSet<T>& params, const GeneratorConfig& cfg, const Styles<T>& styles,
                             const std::vector<RaySamples>& rays, const std::vector<std::vector<std::size_t>>& pixels);

/// Inference render into [B, H, W, 3] (no graph), evaluated in `chunks`
/// contiguous pixel ranges.
template <typename T>
PixelRender<T> render_image(const ParamSet<T>& params, const GeneratorConfig& cfg, const Styles<T>& styles,
                            const std::vector<RaySamples>& rays, std::size_t height, std::size_t width,
                            std::size_t chunks = 1);

template <typename T>
struct GeneratorOutput {
  ad::Tensor<T> image;      // [B, H, W, 3]
  ad::Tensor<T> aux_image;  // [B, H, W, 3]
  /// 1 where the pixel was rendered with gradient tracking, [B * H * W].
  std::vector<std::uint8_t> grad_pixel_mask;
};

/// Training-time forward. Depths are jittered with `rng`; then n_r pixels
/// per image are drawn without replacement and rendered with gradient
/// tracking, the rest without, and both are put back in pixel order.
template <typename T>
GeneratorOutput<T> generator_forward(const ParamSet<T>& params, const GeneratorConfig& cfg,
                                     const RenderSettings& settings, const ad::Tensor<T>& z_s,
                                     const ad::Tensor<T>& z_a, const std::vector<CameraPose>& poses,
                                     std::size_t height, std::size_t width, std::size_t n_r, Rng& rng);

/// Sorted sample of `k` distinct values from [0, n).
std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t k);

}  // namespace cips3d
