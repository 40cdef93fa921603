#pragma once

// Procedural training images: one lambertian sphere near the origin with a
// random albedo, radius and offset on a dark background, carrying a bright
// dot at a fixed off-center spot on its surface so left and right views
// differ. Rendered through the same pinhole cameras as the generator, with
// values in [-1, 1].

#include <cstddef>

#include "cips3d/camera.hpp"
#include "cips3d/ops.hpp"

namespace cips3d {

struct ToyDataConfig {
  double radius_min = 0.06;
  double radius_max = 0.09;
  double max_offset = 0.015;
  double background = 0.05;  // in [0, 1]
  double ambient = 0.25;
  Vec3 light{0.4, 0.8, 0.45};
  Vec3 marker{0.55, 0.35, 0.75};  // world direction of the dot from the sphere center
  double marker_angle = 0.35;     // angular radius, radians

  bool operator==(const ToyDataConfig&) const = default;
};

/// Shades one image for `pose` into [H, W, 3] values in [-1, 1].
template <typename T>
void render_toy_image(const ToyDataConfig& cfg, const CameraPose& pose, std::size_t height, std::size_t width,
                      const Vec3& center, double radius, const Vec3& albedo, T* out);

/// [B, H, W, 3] batch with fresh spheres and cameras drawn from `rng`.
template <typename T>
ad::Tensor<T> toy_batch(Rng& rng, const ToyDataConfig& cfg, std::size_t batch, std::size_t height, std::size_t width,
                        const AngleDistribution& pitch, const AngleDistribution& yaw, double fov, double near,
                        double far);

}  // namespace cips3d
