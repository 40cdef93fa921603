#include "cips3d/toy_data.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cips3d {

template <typename T>
void render_toy_image(const ToyDataConfig& cfg, const CameraPose& pose, std::size_t height, std::size_t width,
                      const Vec3& center, double radius, const Vec3& albedo, T* out) {
  const auto rays = generate_rays(pose, height, width);
  const Vec3 light = cfg.light.normalized();
  const Vec3 marker = cfg.marker.normalized();
  const double marker_cos = std::cos(cfg.marker_angle);
  for (std::size_t p = 0; p < rays.size(); ++p) {
    const Vec3& o = rays.origins[p];
    const Vec3& d = rays.directions[p];
    Vec3 color{cfg.background, cfg.background, cfg.background};
    const Vec3 oc = o - center;
    const double b = oc.dot(d);
    const double disc = b * b - (oc.dot(oc) - radius * radius);
    if (disc >= 0) {
      const double t = -b - std::sqrt(disc);
      if (t > 0) {
        const Vec3 n = (o + d * t - center).normalized();
        const double shade = cfg.ambient + (1.0 - cfg.ambient) * std::max(0.0, n.dot(light));
        color = n.dot(marker) > marker_cos ? Vec3{1.0, 0.95, 0.2} * shade : albedo * shade;
      }
    }
    out[p * 3 + 0] = static_cast<T>(2.0 * std::clamp(color.x, 0.0, 1.0) - 1.0);
    out[p * 3 + 1] = static_cast<T>(2.0 * std::clamp(color.y, 0.0, 1.0) - 1.0);
    out[p * 3 + 2] = static_cast<T>(2.0 * std::clamp(color.z, 0.0, 1.0) - 1.0);
  }
}

template <typename T>
ad::Tensor<T> toy_batch(Rng& rng, const ToyDataConfig& cfg, std::size_t batch, std::size_t height, std::size_t width,
                        const AngleDistribution& pitch, const AngleDistribution& yaw, double fov, double near,
                        double far) {
  if (!(cfg.radius_min > 0) || cfg.radius_max < cfg.radius_min)
    throw std::invalid_argument("toy data: radius range must be positive and ordered");
  ad::Tensor<T> images({batch, height, width, 3});
  auto data = images.mutable_data();
  for (std::size_t b = 0; b < batch; ++b) {
    const double radius = uniform(rng, cfg.radius_min, cfg.radius_max);
    const Vec3 center{uniform(rng, -cfg.max_offset, cfg.max_offset), uniform(rng, -cfg.max_offset, cfg.max_offset),
                      uniform(rng, -cfg.max_offset, cfg.max_offset)};
    const Vec3 albedo{uniform(rng, 0.2, 1.0), uniform(rng, 0.2, 1.0), uniform(rng, 0.2, 1.0)};
    const auto pose = sample_camera(rng, pitch, yaw, fov, near, far);
    render_toy_image<T>(cfg, pose, height, width, center, radius, albedo, data.data() + b * height * width * 3);
  }
  return images;
}

#define CIPS3D_INSTANTIATE_TOY(T)                                                                                   \
  template void render_toy_image<T>(const ToyDataConfig&, const CameraPose&, std::size_t, std::size_t, const Vec3&, \
                                    double, const Vec3&, T*);                                                       \
  template ad::Tensor<T> toy_batch<T>(Rng&, const ToyDataConfig&, std::size_t, std::size_t, std::size_t,            \
                                      const AngleDistribution&, const AngleDistribution&, double, double, double);

CIPS3D_INSTANTIATE_TOY(float)
CIPS3D_INSTANTIATE_TOY(double)

}  // namespace cips3d
