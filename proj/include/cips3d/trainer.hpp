#pragma once

// Adversarial training loop: partial-gradient generator forward, main and
// auxiliary discriminators, non-saturating loss with lazy R1, Adam, and a
// progressive resolution schedule.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cips3d/camera.hpp"
#include "cips3d/discriminator.hpp"
#include "cips3d/generator.hpp"
#include "cips3d/optimizer.hpp"
#include "cips3d/toy_data.hpp"

namespace cips3d {

struct Stage {
  std::size_t step = 0;
  std::size_t resolution = 16;
  /// Rays rendered with gradient tracking per image; nullopt means all.
  std::optional<std::size_t> n_r;

  std::size_t rays() const { return n_r.value_or(resolution * resolution); }
  bool operator==(const Stage&) const = default;
};

struct TrainConfig {
  GeneratorConfig generator;
  RenderSettings render;
  AngleDistribution pitch = AngleDistribution::normal(std::numbers::pi / 2, 0.155, 0.3, std::numbers::pi - 0.3);
  AngleDistribution yaw = AngleDistribution::normal(std::numbers::pi / 2, 0.3, 0.0, std::numbers::pi);
  DiscriminatorConfig disc = main_discriminator();
  DiscriminatorConfig disc_aux = aux_discriminator();
  ToyDataConfig data;
  std::vector<Stage> schedule{{0, 16, std::nullopt}, {2000, 32, 576}};

  std::size_t steps = 500;
  std::size_t batch_size = 8;
  double lr_g = 2e-4;
  double lr_d = 2e-4;
  double mapping_lr_mult = 0.01;
  double beta0 = 0.0;
  double beta1 = 0.999;
  double adam_eps = 1e-8;
  double r1_gamma = 10.0;
  std::size_t r1_interval = 16;
  double aux_weight = 1.0;
  std::uint64_t seed = 0;

  std::string out_dir = "runs/default";
  std::size_t checkpoint_every = 500;
  std::size_t sample_every = 250;
  std::size_t sample_count = 8;
  /// Optional generator checkpoint to start from, e.g. for transfer.
  std::string init_generator;
  /// Train only the appearance branch.
  bool freeze_nerf = false;

  bool operator==(const TrainConfig&) const = default;
};

/// Throws std::invalid_argument describing the first problem found.
void validate(const TrainConfig& cfg);

/// The last stage whose threshold is <= step (the first stage before that).
const Stage& progressive_schedule(std::size_t step, const std::vector<Stage>& schedule);

struct TrainState {
  std::size_t step = 0;
  ParamSet<float> g;
  ParamSet<float> d;
  ParamSet<float> d_aux;
  Adam<float> opt_g;
  Adam<float> opt_d;
  Adam<float> opt_d_aux;
};

TrainState init_state(const TrainConfig& cfg);

struct StepLosses {
  std::size_t step = 0;
  double loss_d = 0;
  double loss_g = 0;
  double loss_d_aux = 0;
  double loss_g_aux = 0;
  std::optional<double> r1;  // set on lazy-R1 steps
};

struct NonFiniteLoss : std::runtime_error {
  NonFiniteLoss(std::size_t step, const std::string& what)
      : std::runtime_error("non-finite " + what + " at step " + std::to_string(step)), step(step) {}
  std::size_t step;
};

/// Random draws for step `step`: latents, poses, depth jitter, pixel subsets.
Rng step_rng(const TrainConfig& cfg, std::size_t step);

/// Real images for step `step` at the current schedule resolution.
ad::Tensor<float> real_batch(const TrainConfig& cfg, std::size_t step);

/// One D update, one aux-D update and one G update. Throws NonFiniteLoss.
StepLosses train_step(TrainState& state, const TrainConfig& cfg, const ad::Tensor<float>& reals, Rng& rng);

/// Multiplier on the R1 penalty at `step`: r1_interval on lazy-R1 steps, else 0.
double r1_weight(const TrainConfig& cfg, std::size_t step);

std::string loss_csv_header();
std::string loss_csv_row(const StepLosses& losses);

/// Runs cfg.steps steps from `state` (or a fresh state), writing the run
/// directory: config.json, loss.csv, checkpoints and sample grids. On a
/// non-finite loss it writes nan_dump.txt and rethrows.
TrainState run_training(const TrainConfig& cfg, std::optional<TrainState> state = std::nullopt,
                        const std::function<void(const StepLosses&)>& on_step = {});

/// Mean |A - flip(B)| where A renders yaw theta and B yaw pi - theta. The sum
/// is formed so that swapping the pair gives a bit-identical score.
template <typename T>
double symmetry_probe(const ParamSet<T>& params, const GeneratorConfig& cfg, const RenderSettings& settings,
                      const ad::Tensor<T>& z_s, const ad::Tensor<T>& z_a, double theta, double pitch,
                      std::size_t height, std::size_t width);

/// Mean |a - flip(b)| over two [H, W, 3] images, symmetric in (a, b).
template <typename T>
double mirror_difference(std::span<const T> a, std::span<const T> b, std::size_t height, std::size_t width);

}  // namespace cips3d
