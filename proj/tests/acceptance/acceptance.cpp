// Acceptance runner: one PASS/FAIL line per criterion.
//
//   acceptance            all criteria
//   acceptance --only 7   a single criterion

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "cips3d/checkpoint.hpp"
#include "cips3d/modfc.hpp"
#include "cips3d/nerf.hpp"
#include "cips3d/posenc.hpp"
#include "cips3d/volume_render.hpp"
#include "oracles.hpp"

using namespace cips3d;
using ad::Tensor;
using test::random_tensor;

namespace {

namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string details;
};

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / fmt::format("cips3d_acceptance_{}_{}", name, ::getpid());
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// 1 ---------------------------------------------------------------------------

double oracle_encoded_distance(const posenc::Point& a, const posenc::Point& b, std::size_t levels) {
  double d2 = 0;
  for (std::size_t axis = 0; axis < 3; ++axis) {
    const double diff = a[axis] - b[axis];
    d2 += diff * diff;
    for (std::size_t k = 0; k < levels; ++k) d2 += 2.0 - 2.0 * std::cos(std::ldexp(std::numbers::pi, static_cast<int>(k)) * diff);
  }
  return std::sqrt(d2);
}

Outcome posenc_counterexample() {
  const auto dir = scratch_dir("posenc");
  const auto csv = dir / "curve.csv", report = dir / "report.txt";
  const auto t0 = clock_type::now();
  const int rc = std::system(fmt::format("\"{}\" analyze-posenc --l-max 10 --out \"{}\" 2> \"{}\"", CIPS3D_CLI_PATH,
                                         csv.string(), report.string())
                                 .c_str());
  const double elapsed = seconds_since(t0);
  if (rc != 0) return {false, fmt::format("analyze-posenc exited with {}", rc)};

  std::istringstream lines(slurp(csv));
  std::string line;
  std::getline(lines, line);
  if (line != "L,d_ab,d_ac") return {false, "unexpected CSV header '" + line + "'"};
  std::vector<posenc::CurveRow> rows;
  while (std::getline(lines, line)) {
    posenc::CurveRow r;
    if (std::sscanf(line.c_str(), "%zu,%lf,%lf", &r.levels, &r.d_ab, &r.d_ac) != 3) return {false, "bad row " + line};
    rows.push_back(r);
  }
  if (rows.size() != 11 || rows.front().levels != 0 || rows.back().levels != 10)
    return {false, fmt::format("expected rows L=0..10, got {}", rows.size())};

  const double deg = std::numbers::pi / 180.0;
  const posenc::Point a{std::cos(70 * deg), 0, std::sin(70 * deg)};
  const posenc::Point b{std::cos(80 * deg), 0, std::sin(80 * deg)};
  const posenc::Point c{-std::cos(70 * deg), 0, std::sin(70 * deg)};
  const double raw_ab = 2 * std::sin(5 * deg), raw_ac = 2 * std::cos(70 * deg);
  const bool raw_ok = std::abs(rows[0].d_ab - raw_ab) < 1e-6 && std::abs(rows[0].d_ac - raw_ac) < 1e-6 &&
                      std::abs(raw_ab - 0.174311) < 1e-6 && std::abs(raw_ac - 0.684040) < 1e-6 && raw_ab < raw_ac;

  double worst = 0;
  for (const auto& r : rows) {
    worst = std::max(worst, std::abs(r.d_ab - oracle_encoded_distance(a, b, r.levels)));
    worst = std::max(worst, std::abs(r.d_ac - oracle_encoded_distance(a, c, r.levels)));
  }
  const double margin = rows.back().d_ab - rows.back().d_ac;

  std::optional<std::size_t> cross;
  for (std::size_t i = rows.size(); i-- > 0;) {
    if (rows[i].d_ab > rows[i].d_ac + 1e-6)
      cross = rows[i].levels;
    else
      break;
  }
  const bool reported = slurp(report).find(fmt::format("crossover L*={}", cross ? std::to_string(*cross) : "none")) !=
                        std::string::npos;

  const bool pass = raw_ok && worst < 1e-6 && margin > 1e-6 && cross && *cross <= 10 && reported && elapsed < 1.0;
  return {pass, fmt::format("d(a,b)={:.6f} d(a,c)={:.6f}; L=10: {:.6f} vs {:.6f} (margin {:.3g}); max curve err {:.2g}; "
                            "L*={}; {:.3f} s",
                            rows[0].d_ab, rows[0].d_ac, rows.back().d_ab, rows.back().d_ac, margin, worst,
                            cross ? std::to_string(*cross) : "none", elapsed)};
}

// 2 ---------------------------------------------------------------------------

Tensor<float> to_float(const Tensor<double>& t) {
  return Tensor<float>(t.shape(), std::vector<float>(t.data().begin(), t.data().end()));
}

Outcome modfc_equivalence() {
  const auto t0 = clock_type::now();
  Rng rng = make_rng(2024);
  double worst32 = 0, worst64 = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t b = 1 + uniform_index(rng, 8), n = 1 + uniform_index(rng, 128);
    const std::size_t din = 1 + uniform_index(rng, 64), dout = 1 + uniform_index(rng, 64);
    const bool demod = trial % 2 == 0;
    const auto x = random_tensor<double>(rng, {b, n, din});
    const auto w = random_tensor<double>(rng, {din, dout});
    const auto bias = random_tensor<double>(rng, {dout});
    const auto s = random_tensor<double>(rng, {b, din}, -1.5, 1.5);
    worst64 = std::max(worst64, test::max_abs_diff<double>(modfc::modfc_reference(x, w, bias, s, demod, 1e-8).data(),
                                                           modfc::modfc(x, w, bias, s, demod, 1e-8).data()));
    const auto xf = to_float(x), wf = to_float(w), bf = to_float(bias), sf = to_float(s);
    worst32 = std::max(worst32, test::max_abs_diff<float>(modfc::modfc_reference(xf, wf, bf, sf, demod, 1e-8f).data(),
                                                          modfc::modfc(xf, wf, bf, sf, demod, 1e-8f).data()));
  }
  const double elapsed = seconds_since(t0);
  return {worst32 < 1e-5 && worst64 < 1e-10 && elapsed < 30.0,
          fmt::format("100 configs: f32 max diff {:.3g}, f64 max diff {:.3g}; {:.2f} s", worst32, worst64, elapsed)};
}

// 3 ---------------------------------------------------------------------------

Outcome modfc_benchmark() {
  const auto r = modfc::benchmark({256, 256, 128, 128}, 1000, 10, 3);
  return {r.speedup >= 1.2 && r.max_abs_diff < 1e-5,
          fmt::format("reference {:.2f} batches/s, efficient {:.2f} batches/s, speedup {:.3f}x (need >= 1.2); "
                      "max diff {:.2g}",
                      r.reference_batches_per_s, r.efficient_batches_per_s, r.speedup, r.max_abs_diff)};
}

// 4 ---------------------------------------------------------------------------

constexpr double kNear = 0.88, kFar = 1.12;

std::vector<double> midpoint_depths(std::size_t n) {
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i)
    t[i] = kNear + (kFar - kNear) * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  return t;
}

std::vector<double> edge_depths(std::size_t n) {
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = kNear + (kFar - kNear) * static_cast<double>(i) / static_cast<double>(n);
  return t;
}

std::vector<double> repeat(const std::vector<double>& depths, std::size_t rays) {
  std::vector<double> out;
  for (std::size_t r = 0; r < rays; ++r) out.insert(out.end(), depths.begin(), depths.end());
  return out;
}

Outcome gradient_integrity() {
  const auto t0 = clock_type::now();
  const double eps = 1e-5;
  std::vector<std::string> parts;
  bool pass = true;
  auto record = [&](const char* name, const ad::GradReport& r, double tol) {
    const bool ok = r.passed(tol) && r.checked > 0;
    pass = pass && ok;
    parts.push_back(fmt::format("{} rel {:.2g}{}", name, r.max_rel_err, ok ? "" : " (" + r.worst_param + ")"));
  };

  Rng rng = make_rng(44);
  {
    const auto x = random_tensor<double>(rng, {2, 3, 4});
    auto w = random_tensor<double>(rng, {4, 5}, -1, 1, true);
    auto b = random_tensor<double>(rng, {5}, -1, 1, true);
    auto gamma = random_tensor<double>(rng, {2, 5}, 0.5, 1.5, true);
    auto beta = random_tensor<double>(rng, {2, 5}, -1, 1, true);
    const auto c = random_tensor<double>(rng, {2, 3, 5});
    record("film",
           ad::finite_diff_check<double>(
               [&] { return ad::sum(ad::mul(nerf::film_siren_block(x, gamma, beta, w, b), c)); },
               {{"w", w}, {"b", b}, {"gamma", gamma}, {"beta", beta}}, eps),
           1e-4);
  }
  {
    const std::size_t rays = 3, n = 5;
    const auto deltas = render::interval_lengths<double>(repeat(midpoint_depths(n), rays), rays, n, kFar);
    auto sigma = random_tensor<double>(rng, {rays, n}, 0.5, 8, true);
    auto feats = random_tensor<double>(rng, {rays, n, 2}, -1, 1, true);
    const auto c = random_tensor<double>(rng, {rays, 2});
    record("composite",
           ad::finite_diff_check<double>(
               [&] { return ad::sum(ad::mul(render::composite(sigma, feats, deltas).features, c)); },
               {{"sigma", sigma}, {"v", feats}}, eps),
           1e-4);
  }
  {
    const auto x = random_tensor<double>(rng, {2, 3, 4});
    auto w = random_tensor<double>(rng, {4, 3}, -1, 1, true);
    auto b = random_tensor<double>(rng, {3}, -1, 1, true);
    auto s = random_tensor<double>(rng, {2, 4}, 0.5, 1.5, true);
    const auto c = random_tensor<double>(rng, {2, 3, 3});
    record("modfc+lrelu",
           ad::finite_diff_check<double>(
               [&] { return ad::sum(ad::mul(ad::leaky_relu(modfc::modfc(x, w, b, s, true, 1e-8), 0.2), c)); },
               {{"w", w}, {"b", b}, {"s", s}}, eps),
           1e-4);
  }
  {
    auto cfg = test::tiny_generator();
    cfg.inr_blocks = 2;
    cfg.dim_z_s = cfg.dim_w_s = cfg.dim_z_a = cfg.dim_w_a = 3;
    cfg.nerf_hidden = 4;
    cfg.dim_v = 3;
    cfg.inr_width = 3;
    auto params = init_generator<double>(cfg, 9);
    test::perturb(params, 9, 0.1);
    auto settings = test::tiny_render();
    settings.samples = 3;
    Rng grng = make_rng(10);
    const auto z_s = sample_latent<double>(grng, 1, cfg.dim_z_s);
    const auto z_a = sample_latent<double>(grng, 1, cfg.dim_z_a);
    const auto pose = CameraPose::look_at_origin(1.4, 1.7, settings.fov, settings.near, settings.far);
    const auto rays = cast_rays({pose}, 2, 2, settings, &grng);
    const auto c = random_tensor<double>(grng, {1, 4, 3});
    record("generator 2x2",
           ad::finite_diff_check<double>(
               [&] {
                 const auto styles = compute_styles(params, cfg, z_s, z_a);
                 const auto out = render_pixels(params, cfg, styles, rays, {{0, 1, 2, 3}});
                 return ad::add(ad::sum(ad::mul(out.rgb, c)), ad::sum(ad::mul(out.aux, c)));
               },
               params.named(), eps),
           1e-4);
  }
  record("r1", test::r1_gradcheck(3, eps), 1e-3);

  const double elapsed = seconds_since(t0);
  pass = pass && elapsed < 120.0;
  std::string details;
  for (const auto& p : parts) details += p + "; ";
  return {pass, details + fmt::format("{:.2f} s", elapsed)};
}

// 5 ---------------------------------------------------------------------------

render::Composite<double> constant_field(const std::vector<double>& depths, double sigma, double v) {
  const std::size_t n = depths.size();
  return render::composite(Tensor<double>({1, n}, sigma), Tensor<double>({1, n, 1}, v),
                           render::interval_lengths<double>(depths, 1, n, kFar));
}

double weight_sum(const render::Composite<double>& c, std::size_t ray = 0) {
  const std::size_t n = c.weights.dim(1);
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += c.weights.data()[ray * n + i];
  return s;
}

Outcome volume_rendering() {
  Rng rng = make_rng(55);
  const std::size_t rays = 10000, n = 24;
  std::vector<double> depths;
  for (std::size_t r = 0; r < rays; ++r) {
    std::vector<double> t(n);
    for (auto& v : t) v = uniform(rng, kNear, kFar);
    std::sort(t.begin(), t.end());
    depths.insert(depths.end(), t.begin(), t.end());
  }
  // Densities span transparent to fully opaque.
  auto sigma = random_tensor<double>(rng, {rays, n}, 0, 1);
  for (auto& s : sigma.mutable_data()) s = std::pow(10.0, 6.0 * s - 2.0) * (uniform(rng, 0, 1) < 0.1 ? 0.0 : 1.0);
  const auto c = render::composite(sigma, random_tensor<double>(rng, {rays, n, 1}),
                                   render::interval_lengths<double>(depths, rays, n, kFar));
  double lo = 1, hi = 0;
  bool nonneg = true;
  for (std::size_t r = 0; r < rays; ++r) {
    const double s = weight_sum(c, r);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
    for (std::size_t i = 0; i < n; ++i) nonneg = nonneg && c.weights.data()[r * n + i] >= 0;
  }
  const bool conserved = nonneg && lo >= 0 && hi <= 1 + 1e-6;

  const double sig = 4.0, v = 0.7;
  const double closed = 1.0 - std::exp(-sig * (kFar - kNear));
  const auto c512 = constant_field(edge_depths(512), sig, v);
  const double err512 = std::max(std::abs(weight_sum(c512) - closed), std::abs(c512.features.data()[0] - closed * v));

  const double e64 = std::abs(weight_sum(constant_field(midpoint_depths(64), sig, 1.0)) - closed);
  const double e128 = std::abs(weight_sum(constant_field(midpoint_depths(128), sig, 1.0)) - closed);
  const double ratio = e128 / e64;

  return {conserved && err512 < 1e-4 && e64 > 0 && ratio <= 0.6,
          fmt::format("sum w over 1e4 rays in [{:.3g}, {:.9f}]; n=512 err {:.2g}; err(128)/err(64) = {:.4f}", lo, hi,
                      err512, ratio)};
}

// 6 ---------------------------------------------------------------------------

Outcome partial_gradients() {
  const test::PartialGradientSetup setup;
  const std::size_t hw = setup.height * setup.width;
  bool pass = true;
  std::string details;
  for (std::size_t n_r : {std::size_t{0}, std::size_t{1}, (hw + 1) / 2, hw}) {
    const auto r = test::partial_gradient_check(setup, n_r);
    bool ok = r.max_diff_vs_oracle < 1e-6 && r.tracked_pixels == setup.batch * n_r;
    if (n_r > 0) ok = ok && r.max_abs_grad > 0;
    if (n_r == hw) ok = ok && r.equals_unmasked_full;
    pass = pass && ok;
    details += fmt::format("n_r={}: diff {:.2g}{}; ", n_r, r.max_diff_vs_oracle,
                           n_r == hw ? (r.equals_unmasked_full ? " exact" : " NOT exact") : "");
  }
  return {pass, details + "8x8, f64"};
}

// 7 ---------------------------------------------------------------------------

Outcome pixel_independence() {
  const GeneratorConfig cfg;
  const RenderSettings settings;
  bool pass = true;
  std::string details;
  for (std::size_t size : {32, 17}) {
    const bool ok = test::chunk_invariant({1, 2, 4}, size, 77, cfg, settings);
    pass = pass && ok;
    details += fmt::format("{0}x{0}: {1}; ", size, ok ? "bit-identical" : "differs");
  }
  return {pass, details + "chunks 1, 2, 4, desk config"};
}

// 8 ---------------------------------------------------------------------------

Outcome aux_routing() {
  bool pass = true;
  std::string details;
  for (std::uint64_t seed : {8, 18}) {
    const auto r = test::aux_routing_check(seed);
    pass = pass && r.nerf_nonzero_tensors > 0 && r.inr_tensors > 0 && r.inr_nonzero_tensors == 0;
    details += fmt::format("seed {}: {} nerf tensors nonzero, {}/{} inr tensors nonzero; ", seed,
                           r.nerf_nonzero_tensors, r.inr_nonzero_tensors, r.inr_tensors);
  }
  return {pass, details.substr(0, details.size() - 2)};
}

// 9 ---------------------------------------------------------------------------

std::size_t g_train_steps = 500;

Outcome training_smoke() {
  const auto dir = scratch_dir("train");
  TrainConfig cfg;
  cfg.steps = g_train_steps;
  cfg.batch_size = 8;
  cfg.schedule = {{0, 16, std::nullopt}};
  cfg.seed = 0;
  cfg.checkpoint_every = cfg.steps;
  cfg.sample_every = cfg.steps;

  std::vector<StepLosses> history;
  double elapsed[2] = {0, 0};
  for (int run = 0; run < 2; ++run) {
    cfg.out_dir = (dir / fmt::format("run{}", run)).string();
    const auto t0 = clock_type::now();
    try {
      run_training(cfg, std::nullopt, [&](const StepLosses& l) {
        if (run == 0) history.push_back(l);
      });
    } catch (const NonFiniteLoss& e) {
      return {false, e.what()};
    }
    elapsed[run] = seconds_since(t0);
  }
  const std::string csv0 = slurp(dir / "run0" / "loss.csv"), csv1 = slurp(dir / "run1" / "loss.csv");
  const bool identical = !csv0.empty() && csv0 == csv1;

  bool finite = history.size() == cfg.steps;
  double best_d = std::numeric_limits<double>::infinity();
  std::size_t best_step = 0;
  for (const auto& l : history) {
    finite = finite && std::isfinite(l.loss_d) && std::isfinite(l.loss_g) && std::isfinite(l.loss_d_aux) &&
             std::isfinite(l.loss_g_aux) && (!l.r1 || std::isfinite(*l.r1));
    if (l.step > 0 && l.loss_d < best_d) {
      best_d = l.loss_d;
      best_step = l.step;
    }
  }
  const double d0 = history.empty() ? 0 : history.front().loss_d;
  const bool dropped = best_d < d0;
  fs::remove_all(dir);
  return {finite && dropped && identical,
          fmt::format("{} steps at 16x16, batch 8: losses {}; loss_D step 0 {:.4f}, min {:.4f} at step {}; "
                      "re-run CSV {}; {:.0f} s + {:.0f} s",
                      cfg.steps, finite ? "finite" : "NOT finite", d0, best_d, best_step,
                      identical ? "identical" : "differs", elapsed[0], elapsed[1])};
}

// 10 --------------------------------------------------------------------------

TrainConfig surgery_train_config() {
  auto cfg = test::tiny_train_config();
  cfg.generator = GeneratorConfig{};
  cfg.render = RenderSettings{};
  cfg.disc = main_discriminator();
  cfg.disc_aux = aux_discriminator();
  cfg.schedule = {{0, 16, std::nullopt}};
  return cfg;
}

Outcome surgery_contracts() {
  const auto cfg = surgery_train_config();
  const auto base = init_generator<float>(cfg.generator, 21);
  const auto transferred = test::finetune_frozen(cfg, base, 100);

  const bool frozen = test::params_bit_equal(base, transferred, "nerf") &&
                      test::params_bit_equal(base, transferred, "map_s");
  const bool moved = !test::params_bit_equal(base, transferred, "inr");

  auto render = [&](const ParamSet<float>& p) { return test::probe_render(p, cfg.generator, cfg.render, 1.3, 4); };
  const auto r_base = render(base), r_transferred = render(transferred);
  const bool endpoints =
      test::bit_equal<float>(render(surgery::interpolate_inr(base, transferred, 0.0)).data(), r_base.data()) &&
      test::bit_equal<float>(render(surgery::interpolate_inr(base, transferred, 1.0)).data(), r_transferred.data());

  const std::size_t blocks = surgery::inr_block_count(base);
  bool partition = true;
  for (std::size_t from : {std::size_t{0}, std::size_t{5}, std::size_t{9}}) {
    const auto swapped = surgery::swap_layers(base, transferred, from);
    for (const auto& name : swapped.names()) {
      bool from_transferred = false;
      if (name.rfind("inr.block", 0) == 0)
        from_transferred = std::stoul(name.substr(9)) >= from;
      else if (name_space(name) == "map_a")
        from_transferred = from < blocks;
      const auto& expected = from_transferred ? transferred : base;
      partition = partition && test::bit_equal<float>(swapped.at(name).data(), expected.at(name).data());
    }
  }

  return {frozen && moved && endpoints && partition,
          fmt::format("freeze 100 steps: nerf/map_s {}, inr {}; interpolation endpoints {}; swap from 0/5/9 {}",
                      frozen ? "bit-unchanged" : "CHANGED", moved ? "updated" : "unchanged",
                      endpoints ? "bit-exact" : "differ", partition ? "partitioned" : "wrong")};
}

// 11 --------------------------------------------------------------------------

template <typename T>
bool round_trip(const ParamSet<T>& params, const fs::path& dir, const std::string& tag) {
  const auto first = dir / (tag + "_1.ckpt"), second = dir / (tag + "_2.ckpt");
  ckpt::save(first, params);
  ckpt::save(second, ckpt::load(first));
  const auto a = slurp(first), b = slurp(second);
  return !a.empty() && a == b;
}

Outcome checkpoint_round_trip() {
  const auto dir = scratch_dir("ckpt");
  const bool fresh = round_trip(init_generator<float>(GeneratorConfig{}, 31), dir, "fresh");
  auto cfg = surgery_train_config();
  cfg.steps = 5;
  cfg.out_dir = (dir / "run").string();
  const auto state = run_training(cfg);
  const bool trained = round_trip(state.g, dir, "trained_g") && round_trip(state.d, dir, "trained_d") &&
                       round_trip(state.d_aux, dir, "trained_d_aux");
  fs::remove_all(dir);
  return {fresh && trained, fmt::format("fresh generator {}; trained generator and discriminators {}",
                                        fresh ? "byte-identical" : "differs", trained ? "byte-identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int only = 0;
  app.add_option("--only", only, "Run a single criterion (1-11)")->check(CLI::Range(1, 11));
  app.add_option("--train-steps", g_train_steps, "Steps for the training smoke run")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"posenc counterexample", posenc_counterexample},
      {"modfc equivalence", modfc_equivalence},
      {"modfc benchmark", modfc_benchmark},
      {"gradient integrity", gradient_integrity},
      {"volume rendering", volume_rendering},
      {"partial gradients", partial_gradients},
      {"pixel independence", pixel_independence},
      {"aux routing", aux_routing},
      {"training smoke run", training_smoke},
      {"surgery contracts", surgery_contracts},
      {"checkpoint round trip", checkpoint_round_trip},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<std::size_t>(only) != i + 1) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << fmt::format("{} {} {}: {}", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.details)
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
