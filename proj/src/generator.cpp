#include "cips3d/generator.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include "cips3d/inr.hpp"
#include "cips3d/volume_render.hpp"

namespace cips3d {

template <typename T>
ParamSet<T> init_generator(const GeneratorConfig& cfg, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  ParamSet<T> params;
  nerf::add_params(params, cfg, rng);
  inr::add_params(params, cfg, rng);
  return params;
}

template <typename T>
GeneratorConfig infer_config(const ParamSet<T>& params, const GeneratorConfig& base) {
  auto shape = [&](const std::string& name) -> const ad::Shape& {
    if (!params.contains(name)) throw std::invalid_argument("generator parameters lack " + name);
    return params.at(name).shape();
  };
  auto count = [&](auto&& name_of) {
    std::size_t n = 0;
    while (params.contains(name_of(n))) ++n;
    return n;
  };
  GeneratorConfig cfg = base;
  cfg.dim_z_s = shape("map_s.fc0.weight").at(0);
  cfg.dim_w_s = shape("map_s.fc0.weight").at(1);
  cfg.dim_z_a = shape("map_a.fc0.weight").at(0);
  cfg.dim_w_a = shape("map_a.fc0.weight").at(1);
  cfg.mapping_layers = count([](std::size_t i) { return "map_s.fc" + std::to_string(i) + ".weight"; });
  cfg.nerf_hidden = shape("nerf.pe.weight").at(1);
  cfg.nerf_blocks = count([](std::size_t i) { return "nerf.block" + std::to_string(i) + ".fc.weight"; });
  cfg.dim_v = shape("nerf.feature.weight").at(1);
  cfg.inr_width = shape("inr.block0.fc0.weight").at(1);
  cfg.inr_blocks = count([](std::size_t i) { return inr::layer_prefix(i, "fc0") + ".weight"; });

  if (!init_generator<T>(cfg, 0).same_layout(params))
    throw std::invalid_argument("generator parameters do not match the layout of the inferred architecture");
  return cfg;
}

template <typename T>
ad::Tensor<T> sample_latent(Rng& rng, std::size_t rows, std::size_t dim) {
  ad::Tensor<T> z({rows, dim});
  for (auto& v : z.mutable_data()) v = static_cast<T>(standard_normal(rng));
  return z;
}

template <typename T>
Styles<T> compute_styles(const ParamSet<T>& params, const GeneratorConfig& cfg, const ad::Tensor<T>& z_s,
                         const ad::Tensor<T>& z_a) {
  if (z_s.rank() != 2 || z_a.rank() != 2 || z_s.dim(0) != z_a.dim(0))
    throw std::invalid_argument("compute_styles: z_s and z_a must be [B, dim] with the same B");
  Styles<T> s;
  s.w_s = nerf::map_shape_code(params, cfg, z_s);
  s.film = nerf::film_from_style(params, cfg, s.w_s);
  s.w_a = inr::map_appearance_code(params, cfg, z_a);
  return s;
}

std::vector<RaySamples> cast_rays(const std::vector<CameraPose>& poses, std::size_t height, std::size_t width,
                                  const RenderSettings& settings, Rng* rng) {
  std::vector<RaySamples> out;
  out.reserve(poses.size());
  for (const auto& pose : poses) out.push_back(stratify_points(generate_rays(pose, height, width), settings.samples, rng));
  return out;
}

template <typename T>
PixelRender<T> render_pixels(const ParamSet<T>& params, const GeneratorConfig& cfg, const Styles<T>& styles,
                             const std::vector<RaySamples>& rays, const std::vector<std::vector<std::size_t>>& pixels) {
  const std::size_t batch = rays.size();
  if (batch == 0 || pixels.size() != batch || styles.w_a.dim(0) != batch)
    throw std::invalid_argument("render_pixels: rays, pixel lists and styles must share the batch size");
  const std::size_t count = pixels[0].size();
  const std::size_t samples = rays[0].samples;
  const double far = rays[0].far;
  if (count == 0) throw std::invalid_argument("render_pixels: empty pixel list");

  std::vector<T> points(batch * count * samples * 3);
  std::vector<double> depths(batch * count * samples);
  for (std::size_t b = 0; b < batch; ++b) {
    if (pixels[b].size() != count || rays[b].samples != samples || rays[b].far != far)
      throw std::invalid_argument("render_pixels: every image needs the same pixel count, samples and far bound");
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t pix = pixels[b][k];
      if (pix >= rays[b].rays) throw std::out_of_range("render_pixels: pixel index out of range");
      for (std::size_t s = 0; s < samples; ++s) {
        const std::size_t dst = (b * count + k) * samples + s;
        const Vec3& p = rays[b].points[pix * samples + s];
        points[dst * 3 + 0] = static_cast<T>(p.x);
        points[dst * 3 + 1] = static_cast<T>(p.y);
        points[dst * 3 + 2] = static_cast<T>(p.z);
        depths[dst] = rays[b].depths[pix * samples + s];
      }
    }
  }

  const ad::Tensor<T> pts({batch, count * samples, 3}, std::move(points));
  const auto field = nerf::forward(params, cfg, pts, styles.film);
  const std::size_t n_rays = batch * count;
  const auto sigma = ad::reshape(field.sigma, ad::Shape{n_rays, samples});
  const auto feats = ad::reshape(field.features, ad::Shape{n_rays, samples, cfg.dim_v});
  const auto deltas = render::interval_lengths<T>(depths, n_rays, samples, far);
  const auto comp = render::composite(sigma, feats, deltas);
  const auto fmap = ad::reshape(comp.features, ad::Shape{batch, count, cfg.dim_v});
  return {inr::forward(params, cfg, fmap, styles.w_a), nerf::to_rgb(params, fmap)};
}

template <typename T>
PixelRender<T> render_image(const ParamSet<T>& params, const GeneratorConfig& cfg, const Styles<T>& styles,
                            const std::vector<RaySamples>& rays, std::size_t height, std::size_t width,
                            std::size_t chunks) {
  const std::size_t pixels = height * width;
  if (chunks == 0 || pixels == 0) throw std::invalid_argument("render_image: chunks and image size must be positive");
  chunks = std::min(chunks, pixels);
  const std::size_t batch = rays.size();
  ad::NoGradGuard no_grad;
  ad::Tensor<T> rgb({batch, height, width, 3});
  ad::Tensor<T> aux({batch, height, width, 3});
  auto rgb_out = rgb.mutable_data();
  auto aux_out = aux.mutable_data();
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t begin = pixels * c / chunks;
    const std::size_t end = pixels * (c + 1) / chunks;
    std::vector<std::size_t> range(end - begin);
    std::iota(range.begin(), range.end(), begin);
    const auto part = render_pixels(params, cfg, styles, rays, std::vector<std::vector<std::size_t>>(batch, range));
    const auto prgb = part.rgb.data();
    const auto paux = part.aux.data();
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t src = b * range.size() * 3;
      const std::size_t dst = (b * pixels + begin) * 3;
      std::copy_n(prgb.begin() + src, range.size() * 3, rgb_out.begin() + dst);
      std::copy_n(paux.begin() + src, range.size() * 3, aux_out.begin() + dst);
    }
  }
  return {rgb, aux};
}

std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t k) {
  if (k > n) throw std::invalid_argument("sample_without_replacement: k > n");
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + uniform_index(rng, n - i)]);
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

namespace {

// Puts tracked and untracked pixels back in row-major order: [B, H, W, 3].
template <typename T>
ad::Tensor<T> assemble(const ad::Tensor<T>& tracked, const ad::Tensor<T>& rest, const std::vector<std::size_t>& order,
                       const ad::Shape& image_shape) {
  if (!rest.defined()) return ad::reshape(tracked, image_shape);
  if (!tracked.defined()) return ad::reshape(rest, image_shape);
  const auto flat = ad::concat_rows<T>({ad::reshape(tracked, ad::Shape{tracked.numel() / 3, 3}),
                                        ad::reshape(rest, ad::Shape{rest.numel() / 3, 3})});
  return ad::reshape(ad::index_select_rows(flat, order), image_shape);
}

}  // namespace

template <typename T>
GeneratorOutput<T> generator_forward(const ParamSet<T>& params, const GeneratorConfig& cfg,
                                     const RenderSettings& settings, const ad::Tensor<T>& z_s,
                                     const ad::Tensor<T>& z_a, const std::vector<CameraPose>& poses,
                                     std::size_t height, std::size_t width, std::size_t n_r, Rng& rng) {
  const std::size_t pixels = height * width;
  const std::size_t batch = poses.size();
  if (n_r > pixels)
    throw std::invalid_argument("generator_forward: n_r = " + std::to_string(n_r) + " exceeds H*W = " +
                                std::to_string(pixels));
  if (batch == 0 || z_s.rank() != 2 || z_s.dim(0) != batch)
    throw std::invalid_argument("generator_forward: one pose per latent row required");

  const auto rays = cast_rays(poses, height, width, settings, &rng);
  const auto styles = compute_styles(params, cfg, z_s, z_a);

  GeneratorOutput<T> out;
  out.grad_pixel_mask.assign(batch * pixels, 0);
  std::vector<std::vector<std::size_t>> tracked(batch), rest(batch);
  // Row of each pixel in concat(tracked rows, untracked rows).
  std::vector<std::size_t> order(batch * pixels);
  for (std::size_t b = 0; b < batch; ++b) {
    tracked[b] = sample_without_replacement(rng, pixels, n_r);
    for (std::size_t p : tracked[b]) out.grad_pixel_mask[b * pixels + p] = 1;
    rest[b].reserve(pixels - n_r);
    for (std::size_t p = 0; p < pixels; ++p) {
      if (out.grad_pixel_mask[b * pixels + p]) {
        order[b * pixels + p] = b * n_r + static_cast<std::size_t>(
                                              std::lower_bound(tracked[b].begin(), tracked[b].end(), p) - tracked[b].begin());
      } else {
        order[b * pixels + p] = batch * n_r + b * (pixels - n_r) + rest[b].size();
        rest[b].push_back(p);
      }
    }
  }

  PixelRender<T> with_grad, without_grad;
  if (n_r > 0) with_grad = render_pixels(params, cfg, styles, rays, tracked);
  if (n_r < pixels) {
    ad::NoGradGuard no_grad;
    without_grad = render_pixels(params, cfg, styles, rays, rest);
  }
  const ad::Shape image_shape{batch, height, width, 3};
  out.image = assemble(with_grad.rgb, without_grad.rgb, order, image_shape);
  out.aux_image = assemble(with_grad.aux, without_grad.aux, order, image_shape);
  return out;
}

#define CIPS3D_INSTANTIATE_GENERATOR(T)                                                                             \
  template ParamSet<T> init_generator<T>(const GeneratorConfig&, std::uint64_t);                                    \
  template GeneratorConfig infer_config<T>(const ParamSet<T>&, const GeneratorConfig&);                              \
  template ad::Tensor<T> sample_latent<T>(Rng&, std::size_t, std::size_t);                                         \
  template Styles<T> compute_styles<T>(const ParamSet<T>&, const GeneratorConfig&, const ad::Tensor<T>&,            \
                                       const ad::Tensor<T>&);                                                       \
  template PixelRender<T> render_pixels<T>(const ParamSet<T>&, const GeneratorConfig&, const Styles<T>&,            \
                                           const std::vector<RaySamples>&,                                          \
                                           const std::vector<std::vector<std::size_t>>&);                           \
  template PixelRender<T> render_image<T>(const ParamSet<T>&, const GeneratorConfig&, const Styles<T>&,             \
                                          const std::vector<RaySamples>&, std::size_t, std::size_t, std::size_t);   \
  template GeneratorOutput<T> generator_forward<T>(const ParamSet<T>&, const GeneratorConfig&,                      \
                                                   const RenderSettings&, const ad::Tensor<T>&,                     \
                                                   const ad::Tensor<T>&, const std::vector<CameraPose>&,            \
                                                   std::size_t, std::size_t, std::size_t, Rng&);

CIPS3D_INSTANTIATE_GENERATOR(float)
CIPS3D_INSTANTIATE_GENERATOR(double)

}  // namespace cips3d
