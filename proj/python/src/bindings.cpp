#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cips3d/checkpoint.hpp"
#include "cips3d/generator.hpp"
#include "cips3d/modfc.hpp"
#include "cips3d/posenc.hpp"
#include "cips3d/run_config.hpp"
#include "cips3d/surgery.hpp"
#include "cips3d/trainer.hpp"
#include "cips3d/volume_render.hpp"

namespace py = pybind11;
using namespace cips3d;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

ad::Tensor<double> to_tensor(const Array& a) {
  ad::Shape shape(a.shape(), a.shape() + a.ndim());
  return ad::Tensor<double>(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

template <typename T>
py::array_t<double> to_array(const ad::Tensor<T>& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<double> out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

class Generator {
 public:
  explicit Generator(ParamSet<float> params) : params_(std::move(params)), cfg_(infer_config(params_)) {}

  static Generator create(std::uint64_t seed, const std::string& config_json) {
    const GeneratorConfig cfg = config_json.empty() ? GeneratorConfig{} : parse_config(config_json).generator;
    return Generator(init_generator<float>(cfg, seed));
  }
  static Generator load(const std::filesystem::path& path) { return Generator(ckpt::load(path)); }
  void save(const std::filesystem::path& path) const { ckpt::save(path, params_); }
  py::bytes to_bytes() const { return py::bytes(ckpt::serialize(params_)); }

  py::tuple render(std::uint64_t seed_zs, std::uint64_t seed_za, double pitch, double yaw, std::size_t size,
                   std::size_t chunks, std::size_t samples) const {
    Rng rs = make_rng(seed_zs), ra = make_rng(seed_za);
    const auto z_s = sample_latent<float>(rs, 1, cfg_.dim_z_s);
    const auto z_a = sample_latent<float>(ra, 1, cfg_.dim_z_a);
    RenderSettings settings;
    settings.samples = samples;
    ad::NoGradGuard no_grad;
    const auto styles = compute_styles(params_, cfg_, z_s, z_a);
    const auto pose = CameraPose::look_at_origin(pitch, yaw, settings.fov, settings.near, settings.far);
    const auto out = render_image(params_, cfg_, styles, cast_rays({pose}, size, size, settings, nullptr), size, size,
                                  chunks);
    return py::make_tuple(to_array(out.rgb), to_array(out.aux));
  }

  std::vector<std::string> names() const { return params_.names(); }
  py::array_t<double> tensor(const std::string& name) const { return to_array(params_.at(name)); }
  py::dict config() const {
    py::dict d;
    d["dim_z_s"] = cfg_.dim_z_s;
    d["dim_w_s"] = cfg_.dim_w_s;
    d["dim_z_a"] = cfg_.dim_z_a;
    d["dim_w_a"] = cfg_.dim_w_a;
    d["mapping_layers"] = cfg_.mapping_layers;
    d["nerf_hidden"] = cfg_.nerf_hidden;
    d["nerf_blocks"] = cfg_.nerf_blocks;
    d["dim_v"] = cfg_.dim_v;
    d["inr_width"] = cfg_.inr_width;
    d["inr_blocks"] = cfg_.inr_blocks;
    return d;
  }
  const ParamSet<float>& params() const { return params_; }

 private:
  ParamSet<float> params_;
  GeneratorConfig cfg_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the cips3d C++ core";

  m.def("gamma_encode", &posenc::gamma_encode, py::arg("t"), py::arg("levels"));
  m.def("t_encode", &posenc::t_encode, py::arg("point"), py::arg("levels"));
  m.def(
      "distance_curve",
      [](const posenc::Point& a, const posenc::Point& b, const posenc::Point& c, std::size_t l_max) {
        std::vector<std::tuple<std::size_t, double, double>> out;
        for (const auto& r : posenc::distance_curve(a, b, c, l_max)) out.emplace_back(r.levels, r.d_ab, r.d_ac);
        return out;
      },
      py::arg("a"), py::arg("b"), py::arg("c"), py::arg("l_max"));
  m.def(
      "check_counterexample",
      [](std::size_t levels) {
        const auto r = posenc::check_counterexample(levels);
        py::dict d;
        d["pass"] = r.pass();
        d["raw_ab"] = r.raw_ab;
        d["raw_ac"] = r.raw_ac;
        d["encoded_ab"] = r.encoded_ab;
        d["encoded_ac"] = r.encoded_ac;
        return d;
      },
      py::arg("levels") = 10);

  m.def(
      "modfc",
      [](const Array& x, const Array& w, const Array& bias, const Array& style, bool demod, bool reference) {
        ad::NoGradGuard no_grad;
        const auto tx = to_tensor(x), tw = to_tensor(w), tb = to_tensor(bias), ts = to_tensor(style);
        return to_array(reference ? modfc::modfc_reference(tx, tw, tb, ts, demod, 1e-8)
                                  : modfc::modfc(tx, tw, tb, ts, demod, 1e-8));
      },
      py::arg("x"), py::arg("weight"), py::arg("bias"), py::arg("style"), py::arg("demod") = true,
      py::arg("reference") = false);
  m.def(
      "bench_modfc",
      [](std::size_t batch, std::size_t seq, std::size_t dim, std::size_t iters, std::size_t warmup) {
        const auto r = modfc::benchmark({batch, seq, dim, dim}, iters, warmup, 0);
        py::dict d;
        d["reference_batches_per_s"] = r.reference_batches_per_s;
        d["efficient_batches_per_s"] = r.efficient_batches_per_s;
        d["speedup"] = r.speedup;
        d["max_abs_diff"] = r.max_abs_diff;
        return d;
      },
      py::arg("batch"), py::arg("seq"), py::arg("dim"), py::arg("iters") = 1000, py::arg("warmup") = 10);

  m.def(
      "composite",
      [](const Array& sigma, const Array& features, const Array& depths, double far) {
        ad::NoGradGuard no_grad;
        const auto s = to_tensor(sigma);
        if (s.rank() != 2 || depths.size() != static_cast<py::ssize_t>(s.numel()))
          throw std::invalid_argument("composite: sigma and depths must both be [rays, samples]");
        const auto deltas = render::interval_lengths<double>(std::span<const double>(depths.data(), depths.size()),
                                                             s.dim(0), s.dim(1), far);
        const auto c = render::composite(s, to_tensor(features), deltas);
        return py::make_tuple(to_array(c.features), to_array(c.weights), to_array(c.transmittance));
      },
      py::arg("sigma"), py::arg("features"), py::arg("depths"), py::arg("far"));

  py::class_<Generator>(m, "Generator")
      .def_static("create", &Generator::create, py::arg("seed") = 0, py::arg("config_json") = "")
      .def_static("load", &Generator::load, py::arg("path"))
      .def("save", &Generator::save, py::arg("path"))
      .def("to_bytes", &Generator::to_bytes)
      .def("render", &Generator::render, py::arg("seed_zs") = 0, py::arg("seed_za") = 0,
           py::arg("pitch") = std::numbers::pi / 2, py::arg("yaw") = std::numbers::pi / 2, py::arg("size") = 16,
           py::arg("chunks") = 1, py::arg("samples") = RenderSettings{}.samples)
      .def("names", &Generator::names)
      .def("tensor", &Generator::tensor, py::arg("name"))
      .def("config", &Generator::config);

  m.def(
      "interpolate_inr",
      [](const Generator& base, const Generator& transferred, double alpha) {
        return Generator(surgery::interpolate_inr(base.params(), transferred.params(), alpha));
      },
      py::arg("base"), py::arg("transferred"), py::arg("alpha"));
  m.def(
      "swap_layers",
      [](const Generator& base, const Generator& transferred, std::size_t from_block) {
        return Generator(surgery::swap_layers(base.params(), transferred.params(), from_block));
      },
      py::arg("base"), py::arg("transferred"), py::arg("from_block"));

  m.def(
      "train",
      [](const std::string& config_json) {
        const auto cfg = parse_config(config_json);
        std::vector<std::tuple<std::size_t, double, double, double, double>> history;
        {
          py::gil_scoped_release release;
          run_training(cfg, std::nullopt, [&](const StepLosses& l) {
            history.emplace_back(l.step, l.loss_d, l.loss_g, l.loss_d_aux, l.loss_g_aux);
          });
        }
        return history;
      },
      py::arg("config_json"));
  m.def("default_config", [] { return dump_config(TrainConfig{}); });
}
