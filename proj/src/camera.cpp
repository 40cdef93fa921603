#include "cips3d/camera.hpp"

#include <algorithm>
#include <numbers>
#include <stdexcept>

namespace cips3d {

CameraPose CameraPose::look_at_origin(double pitch, double yaw, double fov, double near, double far) {
  if (!(fov > 0 && fov < std::numbers::pi)) throw std::invalid_argument("camera: fov must lie in (0, pi)");
  if (!(near > 0 && near < far)) throw std::invalid_argument("camera: need 0 < near < far");
  CameraPose pose;
  pose.pitch = std::clamp(pitch, kPoleMargin, std::numbers::pi - kPoleMargin);
  pose.yaw = yaw;
  pose.fov = fov;
  pose.near = near;
  pose.far = far;
  const double sp = std::sin(pose.pitch);
  pose.origin = {sp * std::cos(yaw), std::cos(pose.pitch), sp * std::sin(yaw)};
  pose.forward = (-pose.origin).normalized();
  const Vec3 world_up{0, 1, 0};
  pose.right = pose.forward.cross(world_up).normalized();
  pose.up = pose.right.cross(pose.forward);
  return pose;
}

double AngleDistribution::sample(Rng& rng) const {
  switch (kind) {
    case Kind::point:
      return mean;
    case Kind::normal:
      return std::clamp(mean + stddev * standard_normal(rng), min, max);
    case Kind::uniform:
      return cips3d::uniform(rng, min, max);
  }
  return mean;
}

CameraPose sample_camera(Rng& rng, const AngleDistribution& pitch, const AngleDistribution& yaw, double fov,
                         double near, double far) {
  const double p = pitch.sample(rng);
  const double y = yaw.sample(rng);
  return CameraPose::look_at_origin(p, y, fov, near, far);
}

RayBatch generate_rays(const CameraPose& pose, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw std::invalid_argument("generate_rays: empty image");
  RayBatch batch;
  batch.height = height;
  batch.width = width;
  batch.near = pose.near;
  batch.far = pose.far;
  batch.origins.assign(height * width, pose.origin);
  batch.directions.reserve(height * width);
  const double half = std::tan(0.5 * pose.fov);
  const double aspect = static_cast<double>(width) / static_cast<double>(height);
  for (std::size_t i = 0; i < height; ++i) {
    // Symmetric in j <-> width-1-j, so mirrored pixels give mirrored rays.
    const double v = (1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(height)) * half;
    for (std::size_t j = 0; j < width; ++j) {
      const double u = (2.0 * (static_cast<double>(j) + 0.5) / static_cast<double>(width) - 1.0) * half * aspect;
      batch.directions.push_back((pose.forward + pose.right * u + pose.up * v).normalized());
    }
  }
  return batch;
}

RaySamples stratify_points(const RayBatch& rays, std::size_t n_samples, Rng* rng) {
  if (n_samples == 0) throw std::invalid_argument("stratify_points: n_samples must be >= 1");
  RaySamples out;
  out.rays = rays.size();
  out.samples = n_samples;
  out.near = rays.near;
  out.far = rays.far;
  out.depths.resize(out.rays * n_samples);
  out.points.resize(out.rays * n_samples);
  const double bin = (rays.far - rays.near) / static_cast<double>(n_samples);
  for (std::size_t r = 0; r < out.rays; ++r) {
    for (std::size_t s = 0; s < n_samples; ++s) {
      const double offset = rng ? uniform01(*rng) : 0.5;
      const double t = rays.near + (static_cast<double>(s) + offset) * bin;
      out.depths[r * n_samples + s] = t;
      out.points[r * n_samples + s] = rays.origins[r] + rays.directions[r] * t;
    }
  }
  return out;
}

}  // namespace cips3d
