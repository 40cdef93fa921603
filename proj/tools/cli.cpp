#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cips3d/checkpoint.hpp"
#include "cips3d/generator.hpp"
#include "cips3d/image_io.hpp"
#include "cips3d/kernels.hpp"
#include "cips3d/modfc.hpp"
#include "cips3d/posenc.hpp"
#include "cips3d/run_config.hpp"
#include "cips3d/surgery.hpp"
#include "cips3d/trainer.hpp"

namespace fs = std::filesystem;
using namespace cips3d;

namespace {

enum Exit { kOk = 0, kError = 1, kBadConfig = 2, kNonFinite = 3 };

posenc::Point parse_point(const std::string& text) {
  posenc::Point p{};
  std::stringstream ss(text);
  std::string item;
  std::size_t i = 0;
  while (std::getline(ss, item, ',')) {
    if (i == 3) throw CLI::ValidationError("expected three comma-separated coordinates: " + text);
    p[i++] = std::stod(item);
  }
  if (i != 3) throw CLI::ValidationError("expected three comma-separated coordinates: " + text);
  return p;
}

struct Model {
  ParamSet<float> params;
  GeneratorConfig cfg;
};

Model load_model(const std::string& path) {
  auto params = ckpt::load(path);
  const auto cfg = infer_config(params);
  return {std::move(params), cfg};
}

Styles<float> styles_for(const Model& m, std::uint64_t seed_zs, std::uint64_t seed_za) {
  Rng rs = make_rng(seed_zs);
  Rng ra = make_rng(seed_za);
  const auto z_s = sample_latent<float>(rs, 1, m.cfg.dim_z_s);
  const auto z_a = sample_latent<float>(ra, 1, m.cfg.dim_z_a);
  ad::NoGradGuard no_grad;
  return compute_styles(m.params, m.cfg, z_s, z_a);
}

void render_to(const Model& m, const Styles<float>& styles, const RenderSettings& settings, double pitch, double yaw,
               std::size_t size, const fs::path& out) {
  const auto pose = CameraPose::look_at_origin(pitch, yaw, settings.fov, settings.near, settings.far);
  const auto img = render_image(m.params, m.cfg, styles, cast_rays({pose}, size, size, settings, nullptr), size, size);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  image::write_ppm(out, image::to_rgb8(img.rgb, 0));
  auto aux = out;
  aux.replace_filename(out.stem().string() + "_nerf" + out.extension().string());
  image::write_ppm(aux, image::to_rgb8(img.aux, 0));
}

struct LatentFlags {
  std::string checkpoint;
  std::uint64_t seed_zs = 0;
  std::uint64_t seed_za = 0;
  double pitch = std::numbers::pi / 2;
  std::size_t size = 64;
  std::size_t samples = RenderSettings{}.samples;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--checkpoint", checkpoint, "Generator checkpoint")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed-zs", seed_zs, "Seed of the shape code");
    cmd->add_option("--seed-za", seed_za, "Seed of the appearance code");
    cmd->add_option("--pitch", pitch, "Camera pitch from +y, radians");
    cmd->add_option("--size", size, "Output height and width")->check(CLI::PositiveNumber);
    cmd->add_option("--samples", samples, "Depth samples per ray")->check(CLI::PositiveNumber);
  }
  RenderSettings settings() const {
    RenderSettings s;
    s.samples = samples;
    return s;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3D-aware generator toolkit: training, rendering, model surgery and analysis"};
  app.require_subcommand(1);

  std::string config_path;
  auto* train = app.add_subcommand("train", "Train on the procedural toy dataset");
  train->add_option("config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);

  std::string init_out;
  std::uint64_t init_seed = 0;
  std::string init_config;
  auto* init = app.add_subcommand("init-model", "Write a freshly initialized generator checkpoint");
  init->add_option("--out", init_out, "Checkpoint path")->required();
  init->add_option("--seed", init_seed, "Initialization seed");
  init->add_option("--config", init_config, "Take the architecture from this run config")->check(CLI::ExistingFile);

  LatentFlags render_flags;
  double render_yaw = std::numbers::pi / 2;
  std::string render_out;
  auto* render = app.add_subcommand("render", "Render one view and its NeRF-branch image (suffix _nerf)");
  render_flags.add_to(render);
  render->add_option("--yaw", render_yaw, "Camera yaw, radians");
  render->add_option("--out", render_out, "Output .ppm path")->required();

  LatentFlags sweep_flags;
  std::size_t frames = 8;
  double yaw_min = std::numbers::pi / 2 - 0.5, yaw_max = std::numbers::pi / 2 + 0.5;
  std::string sweep_dir;
  auto* sweep = app.add_subcommand("sweep-yaw", "Render frames at evenly spaced yaws");
  sweep_flags.add_to(sweep);
  sweep->add_option("--frames", frames, "Number of frames")->check(CLI::PositiveNumber);
  sweep->add_option("--yaw-min", yaw_min, "First yaw, radians");
  sweep->add_option("--yaw-max", yaw_max, "Last yaw, radians");
  sweep->add_option("--out-dir", sweep_dir, "Directory for frame_NNNN.ppm")->required();

  modfc::Dims bench_dims{256, 256, 128, 128};
  std::size_t bench_dim = 128, bench_iters = 1000, bench_warmup = 10;
  auto* bench = app.add_subcommand("bench-modfc", "Time the reference and batched ModFC paths");
  bench->add_option("--batch", bench_dims.batch, "b")->check(CLI::PositiveNumber);
  bench->add_option("--seq", bench_dims.seq, "n")->check(CLI::PositiveNumber);
  bench->add_option("--dim", bench_dim, "d_in = d_out")->check(CLI::PositiveNumber);
  bench->add_option("--iters", bench_iters, "Timed calls per path")->check(CLI::PositiveNumber);
  bench->add_option("--warmup", bench_warmup, "Untimed calls per path");

  std::size_t l_max = 10;
  std::string posenc_out;
  std::string pa, pb, pc;
  auto* posenc_cmd = app.add_subcommand("analyze-posenc", "Distance curves under the fixed positional encoding");
  posenc_cmd->add_option("--l-max", l_max, "Largest L");
  posenc_cmd->add_option("--out", posenc_out, "CSV path (stdout when omitted)");
  posenc_cmd->add_option("--a", pa, "Point a as x,y,z");
  posenc_cmd->add_option("--b", pb, "Point b as x,y,z");
  posenc_cmd->add_option("--c", pc, "Point c as x,y,z");

  std::string base_path, transferred_path, surgery_out;
  double alpha = 0.5, tolerance = 0.0;
  std::size_t from_block = 0;
  auto* interp = app.add_subcommand("interp-models", "Interpolate the appearance branch of two generators");
  auto* swap = app.add_subcommand("swap-models", "Take INR blocks >= from-block from the transferred generator");
  for (auto* cmd : {interp, swap}) {
    cmd->add_option("--base", base_path, "Base generator")->required()->check(CLI::ExistingFile);
    cmd->add_option("--transferred", transferred_path, "Fine-tuned generator")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", surgery_out, "Output checkpoint")->required();
    cmd->add_option("--tolerance", tolerance, "Allowed NeRF weight difference (0 = bitwise)");
  }
  interp->add_option("--alpha", alpha, "0 = base, 1 = transferred")->required()->check(CLI::Range(0.0, 1.0));
  swap->add_option("--from-block", from_block, "First swapped block")->required();

  LatentFlags probe_flags;
  double theta = std::numbers::pi / 3;
  auto* probe = app.add_subcommand("probe-symmetry", "Mirror-symmetry score between yaw theta and pi - theta");
  probe_flags.add_to(probe);
  probe->add_option("--theta", theta, "Yaw of the first view, radians");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      TrainConfig cfg;
      try {
        cfg = load_config(config_path);
      } catch (const ConfigError& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return kBadConfig;
      }
      try {
        run_training(cfg, std::nullopt, [&](const StepLosses& l) {
          if (l.step % 50 == 0 || l.step + 1 == cfg.steps)
            std::cout << fmt::format("step {:6d}  D {:.4f}  G {:.4f}  D_aux {:.4f}  G_aux {:.4f}\n", l.step, l.loss_d,
                                     l.loss_g, l.loss_d_aux, l.loss_g_aux)
                      << std::flush;
        });
      } catch (const NonFiniteLoss& e) {
        std::cerr << e.what() << "; diagnostics in " << (fs::path(cfg.out_dir) / "nan_dump.txt").string() << "\n";
        return kNonFinite;
      }
      std::cout << "finished " << cfg.steps << " steps in " << cfg.out_dir << "\n";
    } else if (*init) {
      GeneratorConfig gc;
      if (!init_config.empty()) gc = load_config(init_config).generator;
      ckpt::save(init_out, init_generator<float>(gc, init_seed));
    } else if (*render) {
      const auto m = load_model(render_flags.checkpoint);
      render_to(m, styles_for(m, render_flags.seed_zs, render_flags.seed_za), render_flags.settings(),
                render_flags.pitch, render_yaw, render_flags.size, render_out);
    } else if (*sweep) {
      const auto m = load_model(sweep_flags.checkpoint);
      const auto styles = styles_for(m, sweep_flags.seed_zs, sweep_flags.seed_za);
      for (std::size_t f = 0; f < frames; ++f) {
        const double t = frames == 1 ? 0.0 : static_cast<double>(f) / static_cast<double>(frames - 1);
        render_to(m, styles, sweep_flags.settings(), sweep_flags.pitch, yaw_min + t * (yaw_max - yaw_min),
                  sweep_flags.size, fs::path(sweep_dir) / fmt::format("frame_{:04}.ppm", f));
      }
    } else if (*bench) {
      bench_dims.in = bench_dims.out = bench_dim;
      const auto r = modfc::benchmark(bench_dims, bench_iters, bench_warmup, 0);
      std::cout << fmt::format("modfc b={} n={} d={} iters={} threads={}\n", bench_dims.batch, bench_dims.seq,
                               bench_dim, bench_iters, kernels::thread_count())
                << fmt::format("reference  {:10.2f} batches/s\n", r.reference_batches_per_s)
                << fmt::format("efficient  {:10.2f} batches/s\n", r.efficient_batches_per_s)
                << fmt::format("speedup    {:10.3f}x\n", r.speedup)
                << fmt::format("max |diff| {:10.3e}\n", r.max_abs_diff);
    } else if (*posenc_cmd) {
      auto triple = posenc::counterexample_triple();
      if (!pa.empty()) triple.a = parse_point(pa);
      if (!pb.empty()) triple.b = parse_point(pb);
      if (!pc.empty()) triple.c = parse_point(pc);
      const auto rows = posenc::distance_curve(triple.a, triple.b, triple.c, l_max);
      if (posenc_out.empty()) {
        posenc::write_curve_csv(std::cout, rows);
      } else {
        std::ofstream f(posenc_out);
        posenc::write_curve_csv(f, rows);
      }
      const auto& first = rows.front();
      const auto& last = rows.back();
      const auto cross = posenc::crossover(rows, 1e-6);
      std::cerr << fmt::format("L=0: d_ab={:.6f} d_ac={:.6f}\nL={}: d_ab={:.6f} d_ac={:.6f}\ncrossover L*={}\n",
                               first.d_ab, first.d_ac, last.levels, last.d_ab, last.d_ac,
                               cross ? std::to_string(*cross) : std::string("none"));
    } else if (*interp || *swap) {
      const auto base = ckpt::load(base_path);
      const auto transferred = ckpt::load(transferred_path);
      ckpt::save(surgery_out, *interp ? surgery::interpolate_inr(base, transferred, alpha, tolerance)
                                      : surgery::swap_layers(base, transferred, from_block, tolerance));
    } else if (*probe) {
      const auto m = load_model(probe_flags.checkpoint);
      Rng rs = make_rng(probe_flags.seed_zs);
      Rng ra = make_rng(probe_flags.seed_za);
      const auto z_s = sample_latent<float>(rs, 1, m.cfg.dim_z_s);
      const auto z_a = sample_latent<float>(ra, 1, m.cfg.dim_z_a);
      const double score = symmetry_probe(m.params, m.cfg, probe_flags.settings(), z_s, z_a, theta, probe_flags.pitch,
                                          probe_flags.size, probe_flags.size);
      std::cout << fmt::format("symmetry score {:.9g} (theta={:.6f})\n", score, theta);
    }
  } catch (const ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kOk;
}
