#pragma once

// Unit-sphere cameras looking at the origin, pinhole rays, and stratified
// depth samples.
//
// Convention: +y is up. A pose at (pitch, yaw) sits at
//   (sin(pitch) cos(yaw), cos(pitch), sin(pitch) sin(yaw)),
// pitch measured from +y, so (pi/2, pi/2) is the frontal view from +z.
// Pixels are row-major, top-left first.

#include <cmath>
#include <cstddef>
#include <vector>

#include "cips3d/random.hpp"

namespace cips3d {

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  bool operator==(const Vec3&) const = default;
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const { return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x}; }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const { return *this * (1.0 / norm()); }
};

/// Smallest distance kept between a pose and the +y/-y poles, where the
/// look-at frame is undefined.
inline constexpr double kPoleMargin = 1e-6;

struct CameraPose {
  Vec3 origin;
  double pitch = 0;
  double yaw = 0;
  double fov = 0;   // full vertical field of view, radians
  double near = 0;  // t_n
  double far = 0;   // t_f
  Vec3 forward, right, up;

  /// Pose on the unit sphere looking at the origin. Pitch is clamped away
  /// from the poles by kPoleMargin.
  static CameraPose look_at_origin(double pitch, double yaw, double fov, double near, double far);
};

struct AngleDistribution {
  enum class Kind { point, normal, uniform };
  Kind kind = Kind::point;
  double mean = 0;
  double stddev = 0;
  /// Draws are clamped to [min, max] (normal) or drawn within it (uniform).
  double min = 0;
  double max = 0;

  static AngleDistribution point(double value) { return {Kind::point, value, 0, value, value}; }
  static AngleDistribution normal(double mean, double stddev, double min, double max) {
    return {Kind::normal, mean, stddev, min, max};
  }
  static AngleDistribution uniform(double min, double max) { return {Kind::uniform, 0.5 * (min + max), 0, min, max}; }

  double sample(Rng& rng) const;
  bool operator==(const AngleDistribution&) const = default;
};

CameraPose sample_camera(Rng& rng, const AngleDistribution& pitch, const AngleDistribution& yaw, double fov,
                         double near, double far);

struct RayBatch {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<Vec3> origins;
  std::vector<Vec3> directions;  // unit length
  double near = 0;
  double far = 0;

  std::size_t size() const { return directions.size(); }
};

RayBatch generate_rays(const CameraPose& pose, std::size_t height, std::size_t width);

/// Depths and points for every ray, row-major [ray][sample].
struct RaySamples {
  std::size_t rays = 0;
  std::size_t samples = 0;
  double near = 0;
  double far = 0;
  std::vector<double> depths;
  std::vector<Vec3> points;
};

/// Splits [near, far] into n_samples equal bins and draws one depth uniformly
/// inside each bin. With no rng, every depth is its bin's midpoint.
RaySamples stratify_points(const RayBatch& rays, std::size_t n_samples, Rng* rng);

}  // namespace cips3d
