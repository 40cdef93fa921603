#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cips3d/camera.hpp"

using namespace cips3d;
constexpr double kPi = std::numbers::pi;

namespace {

void expect_vec_near(const Vec3& a, const Vec3& b, double tol) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
  EXPECT_NEAR(a.z, b.z, tol);
}

}  // namespace

TEST(Camera, SampledOriginsLieOnTheUnitSphere) {
  Rng rng = make_rng(1);
  const auto pitch = AngleDistribution::uniform(0.0, kPi);
  const auto yaw = AngleDistribution::uniform(0.0, 2 * kPi);
  for (int i = 0; i < 1000; ++i) {
    const auto pose = sample_camera(rng, pitch, yaw, 0.2, 0.88, 1.12);
    EXPECT_NEAR(pose.origin.norm(), 1.0, 1e-6);
    expect_vec_near(pose.forward, (-pose.origin).normalized(), 1e-12);
  }
}

TEST(Camera, FrontalConventionIdentity) {
  const auto pose = CameraPose::look_at_origin(kPi / 2, kPi / 2, 0.2, 0.88, 1.12);
  expect_vec_near(pose.origin, {0, 0, 1}, 1e-12);
  expect_vec_near(pose.forward, {0, 0, -1}, 1e-12);
  expect_vec_near(pose.up, {0, 1, 0}, 1e-12);
}

TEST(Camera, PointMassDistributionsAreSeedIndependent) {
  const auto pitch = AngleDistribution::point(1.2);
  const auto yaw = AngleDistribution::point(0.7);
  Rng r1 = make_rng(1), r2 = make_rng(2);
  const auto a = sample_camera(r1, pitch, yaw, 0.2, 0.88, 1.12);
  const auto b = sample_camera(r2, pitch, yaw, 0.2, 0.88, 1.12);
  EXPECT_EQ(a.origin, b.origin);
  EXPECT_EQ(a.forward, b.forward);
}

TEST(Camera, PolesAreClamped) {
  for (double pitch : {0.0, kPi}) {
    const auto pose = CameraPose::look_at_origin(pitch, 0.3, 0.2, 0.88, 1.12);
    EXPECT_NEAR(pose.origin.norm(), 1.0, 1e-6);
    EXPECT_TRUE(std::isfinite(pose.right.norm()));
    EXPECT_NEAR(pose.right.norm(), 1.0, 1e-6);
  }
}

TEST(Camera, NormalDistributionIsClamped) {
  Rng rng = make_rng(3);
  const auto d = AngleDistribution::normal(kPi / 2, 5.0, 0.3, kPi - 0.3);
  for (int i = 0; i < 1000; ++i) {
    const double v = d.sample(rng);
    EXPECT_GE(v, 0.3);
    EXPECT_LE(v, kPi - 0.3);
  }
}

TEST(Rays, SinglePixelLooksForward) {
  const auto pose = CameraPose::look_at_origin(1.1, 0.4, 0.3, 0.88, 1.12);
  const auto rays = generate_rays(pose, 1, 1);
  ASSERT_EQ(rays.size(), 1u);
  expect_vec_near(rays.directions[0], pose.forward, 1e-12);
}

TEST(Rays, CenterPixelOfOddImageLooksForward) {
  const auto pose = CameraPose::look_at_origin(1.0, 2.0, 0.3, 0.88, 1.12);
  const auto rays = generate_rays(pose, 5, 7);
  expect_vec_near(rays.directions[2 * 7 + 3], pose.forward, 1e-6);
}

TEST(Rays, FourByFourGivesSixteenUnitRays) {
  const auto pose = CameraPose::look_at_origin(kPi / 2, kPi / 2, 0.2, 0.88, 1.12);
  const auto rays = generate_rays(pose, 4, 4);
  ASSERT_EQ(rays.size(), 16u);
  for (std::size_t i = 0; i < 16; ++i) {
    EXPECT_NEAR(rays.directions[i].norm(), 1.0, 1e-6);
    EXPECT_EQ(rays.origins[i], pose.origin);
  }
}

TEST(Rays, MirroredPixelsGiveMirroredDirections) {
  const auto pose = CameraPose::look_at_origin(1.3, 0.9, 0.25, 0.88, 1.12);
  const std::size_t h = 6, w = 5;
  const auto rays = generate_rays(pose, h, w);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) {
      const Vec3& d = rays.directions[i * w + j];
      const Vec3& m = rays.directions[i * w + (w - 1 - j)];
      // Reflection across the camera's vertical plane flips the right component.
      EXPECT_NEAR(d.dot(pose.right), -m.dot(pose.right), 1e-6);
      EXPECT_NEAR(d.dot(pose.up), m.dot(pose.up), 1e-6);
      EXPECT_NEAR(d.dot(pose.forward), m.dot(pose.forward), 1e-6);
    }
}

TEST(Rays, RowMajorTopLeftFirst) {
  const auto pose = CameraPose::look_at_origin(kPi / 2, kPi / 2, 0.5, 0.88, 1.12);
  const auto rays = generate_rays(pose, 3, 3);
  EXPECT_GT(rays.directions[0].dot(pose.up), 0);      // top row
  EXPECT_LT(rays.directions[0].dot(pose.right), 0);   // left column
  EXPECT_LT(rays.directions[8].dot(pose.up), 0);
  EXPECT_GT(rays.directions[8].dot(pose.right), 0);
}

TEST(Rays, GenerationIsPure) {
  const auto pose = CameraPose::look_at_origin(1.0, 1.0, 0.2, 0.88, 1.12);
  const auto a = generate_rays(pose, 4, 6);
  const auto b = generate_rays(pose, 4, 6);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.directions[i], b.directions[i]);
}

TEST(Stratify, MidpointModeSingleSample) {
  const auto pose = CameraPose::look_at_origin(kPi / 2, kPi / 2, 0.2, 0.88, 1.12);
  const auto s = stratify_points(generate_rays(pose, 1, 1), 1, nullptr);
  EXPECT_DOUBLE_EQ(s.depths[0], (0.88 + 1.12) / 2);
}

TEST(Stratify, DepthsAreStrictlyIncreasingInsideBounds) {
  Rng rng = make_rng(4);
  const auto pose = CameraPose::look_at_origin(1.2, 0.3, 0.2, 0.88, 1.12);
  const auto rays = generate_rays(pose, 3, 3);
  const auto s = stratify_points(rays, 12, &rng);
  for (std::size_t r = 0; r < s.rays; ++r) {
    for (std::size_t k = 0; k < 12; ++k) {
      const double t = s.depths[r * 12 + k];
      EXPECT_GE(t, 0.88);
      EXPECT_LE(t, 1.12);
      if (k > 0) EXPECT_GT(t, s.depths[r * 12 + k - 1]);
      const Vec3 p = rays.origins[r] + rays.directions[r] * t;
      EXPECT_NEAR((p - s.points[r * 12 + k]).norm(), 0.0, 1e-12);
    }
  }
}

TEST(Stratify, MeanDepthMatchesBinCenters) {
  Rng rng = make_rng(5);
  const auto pose = CameraPose::look_at_origin(kPi / 2, kPi / 2, 0.2, 0.5, 1.5);
  const auto rays = generate_rays(pose, 1, 1);
  const std::size_t n = 4, draws = 10000;
  std::vector<double> mean(n, 0.0);
  for (std::size_t d = 0; d < draws; ++d) {
    const auto s = stratify_points(rays, n, &rng);
    for (std::size_t k = 0; k < n; ++k) mean[k] += s.depths[k] / draws;
  }
  const double bin = 1.0 / n;
  const double sigma = bin / std::sqrt(12.0) / std::sqrt(static_cast<double>(draws));
  for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(mean[k], 0.5 + (k + 0.5) * bin, 3 * sigma);
}
