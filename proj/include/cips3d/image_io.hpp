#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "cips3d/ops.hpp"

namespace cips3d::image {

/// Model output to 8 bits: round(255 * (tanh(x) + 1) / 2).
std::uint8_t to_byte(double x);

struct Rgb8 {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB
};

/// Image `index` of a [B, H, W, 3] tensor.
template <typename T>
Rgb8 to_rgb8(const ad::Tensor<T>& images, std::size_t index);

/// All images of a [B, H, W, 3] tensor side by side in rows of `columns`.
template <typename T>
Rgb8 grid(const ad::Tensor<T>& images, std::size_t columns);

/// Binary P6, maxval 255, written atomically.
void write_ppm(const std::filesystem::path& path, const Rgb8& image);
Rgb8 read_ppm(const std::filesystem::path& path);

}  // namespace cips3d::image
