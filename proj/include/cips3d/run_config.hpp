#pragma once

// JSON run configuration. Every key is optional and falls back to the
// TrainConfig default; unknown keys are an error.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "cips3d/trainer.hpp"

namespace cips3d {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

TrainConfig parse_config(std::string_view json_text);
TrainConfig load_config(const std::filesystem::path& path);

/// Complete, self-contained snapshot; parse_config(dump_config(c)) == c.
std::string dump_config(const TrainConfig& cfg);

}  // namespace cips3d
