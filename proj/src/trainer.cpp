#include "cips3d/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <fmt/format.h>

#include "cips3d/checkpoint.hpp"
#include "cips3d/image_io.hpp"
#include "cips3d/losses.hpp"
#include "cips3d/run_config.hpp"
#include "cips3d/surgery.hpp"

namespace cips3d {
namespace {

constexpr std::uint64_t kDataStream = 0x5eed'da7a;
constexpr std::uint64_t kSampleStream = 0x5a3b1e;

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

AdamOptions adam_options(const TrainConfig& cfg, double lr, bool generator) {
  AdamOptions o;
  o.lr = lr;
  o.beta0 = cfg.beta0;
  o.beta1 = cfg.beta1;
  o.eps = cfg.adam_eps;
  if (generator) o.lr_multipliers = {{"map_s.", cfg.mapping_lr_mult}, {"map_a.", cfg.mapping_lr_mult}};
  return o;
}

double checked(const ad::Tensor<float>& loss, std::size_t step, const char* what) {
  const double v = static_cast<double>(loss.item());
  if (!std::isfinite(v)) throw NonFiniteLoss(step, what);
  return v;
}

// One discriminator update on reals vs detached fakes, with lazy R1.
double update_discriminator(ParamSet<float>& d, const DiscriminatorConfig& dc, Adam<float>& opt,
                            const TrainConfig& cfg, const ad::Tensor<float>& reals, const ad::Tensor<float>& fakes,
                            std::size_t step, double r1_weight, std::optional<double>* r1_out, const char* tag) {
  d.zero_grads();
  const auto loss = discriminator_loss(discriminate(d, dc, reals), discriminate(d, dc, fakes.detach()));
  const double value = checked(loss, step, tag);
  ad::backward(loss);
  if (r1_weight > 0) {
    const Critic<float> critic = [&](const ad::Tensor<float>& x) { return discriminate(d, dc, x); };
    const auto penalty = r1_penalty(critic, reals, static_cast<float>(cfg.r1_gamma));
    const double r1 = checked(penalty, step, "r1 penalty");
    if (r1_out) *r1_out = r1;
    ad::backward(ad::scale(penalty, static_cast<float>(r1_weight)));
  }
  opt.step(d);
  d.zero_grads();
  return value;
}

void write_samples(const TrainConfig& cfg, const TrainState& state, const std::filesystem::path& dir) {
  Rng rng = make_rng(cfg.seed, kSampleStream);
  const std::size_t n = std::max<std::size_t>(cfg.sample_count, 1);
  const std::size_t res = progressive_schedule(state.step, cfg.schedule).resolution;
  const auto z_s = sample_latent<float>(rng, n, cfg.generator.dim_z_s);
  const auto z_a = sample_latent<float>(rng, n, cfg.generator.dim_z_a);
  std::vector<CameraPose> poses;
  for (std::size_t i = 0; i < n; ++i) poses.push_back(sample_camera(rng, cfg.pitch, cfg.yaw, cfg.render.fov,
                                                                    cfg.render.near, cfg.render.far));
  ad::NoGradGuard no_grad;
  const auto styles = compute_styles(state.g, cfg.generator, z_s, z_a);
  const auto out = render_image(state.g, cfg.generator, styles, cast_rays(poses, res, res, cfg.render, nullptr), res, res);
  const auto stem = fmt::format("step_{:06}", state.step);
  image::write_ppm(dir / (stem + ".ppm"), image::grid(out.rgb, 4));
  image::write_ppm(dir / (stem + "_nerf.ppm"), image::grid(out.aux, 4));
}

void write_checkpoints(const TrainState& state, const std::filesystem::path& dir, const std::string& suffix) {
  ckpt::save(dir / ("generator" + suffix + ".ckpt"), state.g);
  ckpt::save(dir / ("disc" + suffix + ".ckpt"), state.d);
  ckpt::save(dir / ("disc_aux" + suffix + ".ckpt"), state.d_aux);
}

double max_abs(const ParamSet<float>& params, std::string* where) {
  double m = 0;
  for (const auto& [name, e] : params.entries())
    for (float v : e.tensor.data()) {
      const double a = std::isfinite(v) ? std::abs(static_cast<double>(v)) : INFINITY;
      if (a > m || (std::isinf(a) && !std::isinf(m))) {
        m = a;
        *where = name;
      }
    }
  return m;
}

void write_nan_dump(const std::filesystem::path& path, const NonFiniteLoss& err, const TrainState& state,
                    const std::vector<StepLosses>& recent) {
  std::ofstream f(path);
  f << "error: " << err.what() << "\n";
  f << "recent losses:\n" << loss_csv_header();
  for (const auto& l : recent) f << loss_csv_row(l);
  const std::pair<const char*, const ParamSet<float>*> sets[] = {
      {"generator", &state.g}, {"disc", &state.d}, {"disc_aux", &state.d_aux}};
  for (const auto& [label, params] : sets) {
    std::string where;
    const double m = max_abs(*params, &where);
    f << label << ": max |w| = " << m << " in " << where << "\n";
  }
}

}  // namespace

void validate(const TrainConfig& cfg) {
  require(!cfg.schedule.empty(), "schedule must not be empty");
  require(cfg.schedule.front().step == 0, "the first schedule stage must start at step 0");
  for (std::size_t i = 0; i < cfg.schedule.size(); ++i) {
    const auto& s = cfg.schedule[i];
    require(s.resolution > 0, "schedule resolutions must be positive");
    require(i == 0 || s.step > cfg.schedule[i - 1].step, "schedule thresholds must be strictly ascending");
    require(s.rays() <= s.resolution * s.resolution,
            fmt::format("n_r = {} exceeds H*W = {} at the stage starting at step {}", s.rays(),
                        s.resolution * s.resolution, s.step));
  }
  require(cfg.batch_size > 0, "batch_size must be positive");
  require(cfg.lr_g > 0 && cfg.lr_d > 0 && cfg.mapping_lr_mult > 0, "learning rates must be positive");
  require(cfg.beta0 >= 0 && cfg.beta0 < 1 && cfg.beta1 >= 0 && cfg.beta1 < 1, "Adam betas must lie in [0, 1)");
  require(cfg.adam_eps > 0, "adam_eps must be positive");
  require(cfg.r1_gamma >= 0 && cfg.aux_weight >= 0, "r1_gamma and aux_weight must be non-negative");
  require(cfg.render.samples > 0, "render.samples must be positive");
  require(cfg.render.near > 0 && cfg.render.near < cfg.render.far, "need 0 < near < far");
  require(cfg.render.fov > 0 && cfg.render.fov < std::numbers::pi, "fov must lie in (0, pi)");
  require(cfg.disc_aux.base_channels < cfg.disc.base_channels,
          "the auxiliary discriminator must have fewer channels than the main one");
  require(cfg.disc.prefix != cfg.disc_aux.prefix, "discriminator prefixes must differ");
  require(cfg.generator.inr_blocks > 0 && cfg.generator.nerf_blocks > 0, "generator needs blocks");
}

const Stage& progressive_schedule(std::size_t step, const std::vector<Stage>& schedule) {
  if (schedule.empty()) throw std::invalid_argument("progressive_schedule: empty schedule");
  const Stage* current = &schedule.front();
  for (const auto& s : schedule)
    if (s.step <= step) current = &s;
  return *current;
}

TrainState init_state(const TrainConfig& cfg) {
  TrainState s{0,
               init_generator<float>(cfg.generator, cfg.seed),
               init_discriminator<float>(cfg.disc, cfg.seed + 1),
               init_discriminator<float>(cfg.disc_aux, cfg.seed + 2),
               Adam<float>(adam_options(cfg, cfg.lr_g, true)),
               Adam<float>(adam_options(cfg, cfg.lr_d, false)),
               Adam<float>(adam_options(cfg, cfg.lr_d, false))};
  if (!cfg.init_generator.empty()) {
    auto loaded = ckpt::load(cfg.init_generator);
    if (infer_config(loaded, cfg.generator) != cfg.generator)
      throw std::invalid_argument(cfg.init_generator + " does not match the configured generator architecture");
    s.g = std::move(loaded);
  }
  if (cfg.freeze_nerf) surgery::freeze_nerf(s.g);
  return s;
}

Rng step_rng(const TrainConfig& cfg, std::size_t step) { return make_rng(cfg.seed, step); }

ad::Tensor<float> real_batch(const TrainConfig& cfg, std::size_t step) {
  Rng rng = make_rng(cfg.seed ^ kDataStream, step);
  const std::size_t res = progressive_schedule(step, cfg.schedule).resolution;
  return toy_batch<float>(rng, cfg.data, cfg.batch_size, res, res, cfg.pitch, cfg.yaw, cfg.render.fov,
                          cfg.render.near, cfg.render.far);
}

StepLosses train_step(TrainState& state, const TrainConfig& cfg, const ad::Tensor<float>& reals, Rng& rng) {
  const auto& stage = progressive_schedule(state.step, cfg.schedule);
  const std::size_t res = stage.resolution;
  if (reals.rank() != 4 || reals.dim(1) != res || reals.dim(2) != res || reals.dim(3) != 3 || reals.dim(0) == 0)
    throw std::invalid_argument(fmt::format("train_step: reals must be [B, {0}, {0}, 3] at step {1}", res, state.step));
  const std::size_t batch = reals.dim(0);

  StepLosses out;
  out.step = state.step;
  const auto z_s = sample_latent<float>(rng, batch, cfg.generator.dim_z_s);
  const auto z_a = sample_latent<float>(rng, batch, cfg.generator.dim_z_a);
  std::vector<CameraPose> poses;
  for (std::size_t i = 0; i < batch; ++i)
    poses.push_back(sample_camera(rng, cfg.pitch, cfg.yaw, cfg.render.fov, cfg.render.near, cfg.render.far));
  // The generator is untouched by the D updates, so one forward pass serves both.
  const auto gen = generator_forward(state.g, cfg.generator, cfg.render, z_s, z_a, poses, res, res, stage.rays(), rng);

  const double r1 = r1_weight(cfg, state.step);
  out.loss_d = update_discriminator(state.d, cfg.disc, state.opt_d, cfg, reals, gen.image, state.step, r1,
                                    &out.r1, "discriminator loss");
  out.loss_d_aux = update_discriminator(state.d_aux, cfg.disc_aux, state.opt_d_aux, cfg, reals, gen.aux_image,
                                        state.step, r1, nullptr, "auxiliary discriminator loss");

  {
    FrozenScope<float> freeze_d(state.d), freeze_aux(state.d_aux);
    const auto loss_g = generator_loss(discriminate(state.d, cfg.disc, gen.image));
    const auto loss_g_aux = generator_loss(discriminate(state.d_aux, cfg.disc_aux, gen.aux_image));
    out.loss_g = checked(loss_g, state.step, "generator loss");
    out.loss_g_aux = checked(loss_g_aux, state.step, "auxiliary generator loss");
    state.g.zero_grads();
    ad::backward(ad::add(loss_g, ad::scale(loss_g_aux, static_cast<float>(cfg.aux_weight))));
    state.opt_g.step(state.g);
    state.g.zero_grads();
  }
  ++state.step;
  return out;
}

double r1_weight(const TrainConfig& cfg, std::size_t step) {
  if (cfg.r1_gamma <= 0 || cfg.r1_interval == 0 || step % cfg.r1_interval != 0) return 0.0;
  return static_cast<double>(cfg.r1_interval);
}

std::string loss_csv_header() { return "step,loss_d,loss_g,loss_d_aux,loss_g_aux,r1\n"; }

std::string loss_csv_row(const StepLosses& l) {
  return fmt::format("{},{:.9g},{:.9g},{:.9g},{:.9g},{}\n", l.step, l.loss_d, l.loss_g, l.loss_d_aux, l.loss_g_aux,
                     l.r1 ? fmt::format("{:.9g}", *l.r1) : std::string());
}

TrainState run_training(const TrainConfig& cfg, std::optional<TrainState> initial,
                        const std::function<void(const StepLosses&)>& on_step) {
  validate(cfg);
  const std::filesystem::path dir = cfg.out_dir;
  std::filesystem::create_directories(dir / "checkpoints");
  std::filesystem::create_directories(dir / "samples");
  ckpt::write_file_atomic(dir / "config.json", dump_config(cfg));

  TrainState state = initial ? std::move(*initial) : init_state(cfg);
  std::ofstream csv(dir / "loss.csv", std::ios::trunc);
  csv << loss_csv_header();
  std::vector<StepLosses> recent;
  while (state.step < cfg.steps) {
    const std::size_t step = state.step;
    Rng rng = step_rng(cfg, step);
    StepLosses losses;
    try {
      losses = train_step(state, cfg, real_batch(cfg, step), rng);
    } catch (const NonFiniteLoss& err) {
      csv.flush();
      write_nan_dump(dir / "nan_dump.txt", err, state, recent);
      throw;
    }
    csv << loss_csv_row(losses);
    recent.push_back(losses);
    if (recent.size() > 20) recent.erase(recent.begin());
    if (on_step) on_step(losses);
    if (cfg.checkpoint_every > 0 && state.step % cfg.checkpoint_every == 0)
      write_checkpoints(state, dir / "checkpoints", fmt::format("_{:06}", state.step));
    if (cfg.sample_every > 0 && state.step % cfg.sample_every == 0) write_samples(cfg, state, dir / "samples");
  }
  csv.flush();
  write_checkpoints(state, dir, "");
  return state;
}

template <typename T>
double mirror_difference(std::span<const T> a, std::span<const T> b, std::size_t height, std::size_t width) {
  if (a.size() != height * width * 3 || b.size() != a.size())
    throw std::invalid_argument("mirror_difference: images must both be [H, W, 3]");
  double total = 0;
  auto diff = [&](std::span<const T> x, std::span<const T> y, std::size_t i, std::size_t j, std::size_t c) {
    return std::abs(static_cast<double>(x[(i * width + j) * 3 + c]) -
                    static_cast<double>(y[(i * width + (width - 1 - j)) * 3 + c]));
  };
  for (std::size_t i = 0; i < height; ++i)
    for (std::size_t j = 0; 2 * j < width; ++j)
      for (std::size_t c = 0; c < 3; ++c) {
        const double t1 = diff(a, b, i, j, c);
        if (2 * j + 1 == width) {
          total += t1;
          continue;
        }
        const double t2 = diff(b, a, i, j, c);
        total += std::min(t1, t2) + std::max(t1, t2);
      }
  return total / static_cast<double>(a.size());
}

template <typename T>
double symmetry_probe(const ParamSet<T>& params, const GeneratorConfig& cfg, const RenderSettings& settings,
                      const ad::Tensor<T>& z_s, const ad::Tensor<T>& z_a, double theta, double pitch,
                      std::size_t height, std::size_t width) {
  if (z_s.rank() != 2 || z_s.dim(0) != 1) throw std::invalid_argument("symmetry_probe: expects one latent pair");
  ad::NoGradGuard no_grad;
  const auto styles = compute_styles(params, cfg, z_s, z_a);
  auto render = [&](double yaw) {
    const auto pose = CameraPose::look_at_origin(pitch, yaw, settings.fov, settings.near, settings.far);
    return render_image(params, cfg, styles, cast_rays({pose}, height, width, settings, nullptr), height, width).rgb;
  };
  const auto first = render(theta);
  const auto second = render(std::numbers::pi - theta);
  return mirror_difference<T>(first.data(), second.data(), height, width);
}

template double mirror_difference<float>(std::span<const float>, std::span<const float>, std::size_t, std::size_t);
template double mirror_difference<double>(std::span<const double>, std::span<const double>, std::size_t, std::size_t);
template double symmetry_probe<float>(const ParamSet<float>&, const GeneratorConfig&, const RenderSettings&,
                                      const ad::Tensor<float>&, const ad::Tensor<float>&, double, double, std::size_t,
                                      std::size_t);
template double symmetry_probe<double>(const ParamSet<double>&, const GeneratorConfig&, const RenderSettings&,
                                       const ad::Tensor<double>&, const ad::Tensor<double>&, double, double,
                                       std::size_t, std::size_t);

}  // namespace cips3d
