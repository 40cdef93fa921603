#pragma once

// Binary parameter checkpoints.
//
//   magic "CIPS3D\0" (7 bytes), format_version u32, tensor_count u32, then per
//   tensor in name order: name_len u16, UTF-8 name, rank u8, dims u32 each,
//   dtype u8 (0 = f32), raw data. All integers and floats little-endian.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "cips3d/params.hpp"

namespace cips3d::ckpt {

inline constexpr std::string_view kMagic{"CIPS3D\0", 7};
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::uint8_t kDtypeF32 = 0;

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// f64 parameters are narrowed to f32.
template <typename T>
std::string serialize(const ParamSet<T>& params);

ParamSet<float> deserialize(std::string_view bytes);

template <typename T>
void save(const std::filesystem::path& path, const ParamSet<T>& params);

ParamSet<float> load(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

}  // namespace cips3d::ckpt
