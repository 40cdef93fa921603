#include "cips3d/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cips3d/checkpoint.hpp"

namespace cips3d::image {

std::uint8_t to_byte(double x) {
  const double v = std::clamp(0.5 * (std::tanh(x) + 1.0), 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(255.0 * v));
}

template <typename T>
Rgb8 to_rgb8(const ad::Tensor<T>& images, std::size_t index) {
  return grid(ad::slice_rows(images, index, index + 1).detach(), 1);
}

template <typename T>
Rgb8 grid(const ad::Tensor<T>& images, std::size_t columns) {
  if (images.rank() != 4 || images.dim(3) != 3 || images.dim(0) == 0)
    throw std::invalid_argument("image grid: expected a non-empty [B, H, W, 3] tensor");
  const std::size_t n = images.dim(0), h = images.dim(1), w = images.dim(2);
  columns = std::clamp<std::size_t>(columns, 1, n);
  const std::size_t rows = (n + columns - 1) / columns;
  Rgb8 out{rows * h, columns * w, std::vector<std::uint8_t>(rows * h * columns * w * 3, 0)};
  const auto data = images.data();
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t oy = (k / columns) * h, ox = (k % columns) * w;
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j)
        for (std::size_t c = 0; c < 3; ++c)
          out.pixels[((oy + i) * out.width + ox + j) * 3 + c] =
              to_byte(static_cast<double>(data[((k * h + i) * w + j) * 3 + c]));
  }
  return out;
}

void write_ppm(const std::filesystem::path& path, const Rgb8& image) {
  std::string bytes = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  bytes.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
  ckpt::write_file_atomic(path, bytes);
}

Rgb8 read_ppm(const std::filesystem::path& path) {
  const std::string bytes = ckpt::read_file(path);
  std::istringstream in(bytes);
  std::string magic;
  std::size_t w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P6" || maxval != 255 || !in) throw std::runtime_error(path.string() + ": not an 8-bit P6 image");
  in.get();
  const auto offset = static_cast<std::size_t>(in.tellg());
  if (bytes.size() - offset != w * h * 3) throw std::runtime_error(path.string() + ": pixel data size mismatch");
  Rgb8 out{h, w, std::vector<std::uint8_t>(bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end())};
  return out;
}

template Rgb8 to_rgb8<float>(const ad::Tensor<float>&, std::size_t);
template Rgb8 to_rgb8<double>(const ad::Tensor<double>&, std::size_t);
template Rgb8 grid<float>(const ad::Tensor<float>&, std::size_t);
template Rgb8 grid<double>(const ad::Tensor<double>&, std::size_t);

}  // namespace cips3d::image
