#include "cips3d/run_config.hpp"

#include <set>

#include <json.hpp>

#include "cips3d/checkpoint.hpp"

namespace cips3d {
namespace {

using json = nlohmann::json;

// Reads optional members of one JSON object and rejects anything unread.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <typename V>
  void read(const char* key, V& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<V>();
    } catch (const json::exception& e) {
      throw ConfigError(where() + "." + key + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string sub(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError("unknown key " + sub(key.c_str()));
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename F>
void section(Section& parent, const char* key, F&& body) {
  if (const json* j = parent.child(key)) {
    Section s(*j, parent.sub(key));
    body(s);
    s.finish();
  }
}

void read_vec(Section& s, const char* key, Vec3& v) {
  std::array<double, 3> a{v.x, v.y, v.z};
  s.read(key, a);
  v = {a[0], a[1], a[2]};
}

void read_angle(Section& parent, const char* key, AngleDistribution& d) {
  section(parent, key, [&](Section& s) {
    std::string kind = d.kind == AngleDistribution::Kind::point    ? "point"
                       : d.kind == AngleDistribution::Kind::normal ? "normal"
                                                                   : "uniform";
    s.read("kind", kind);
    s.read("mean", d.mean);
    s.read("stddev", d.stddev);
    s.read("min", d.min);
    s.read("max", d.max);
    if (kind == "point") d.kind = AngleDistribution::Kind::point;
    else if (kind == "normal") d.kind = AngleDistribution::Kind::normal;
    else if (kind == "uniform") d.kind = AngleDistribution::Kind::uniform;
    else throw ConfigError(s.sub("kind") + ": expected point, normal or uniform");
    if (d.min > d.max) throw ConfigError(parent.sub(key) + ": min exceeds max");
  });
}

void read_disc(Section& parent, const char* key, DiscriminatorConfig& d) {
  section(parent, key, [&](Section& s) {
    s.read("prefix", d.prefix);
    s.read("base_channels", d.base_channels);
    s.read("layers", d.layers);
    s.read("slope", d.slope);
  });
}

json angle_json(const AngleDistribution& d) {
  const char* kind = d.kind == AngleDistribution::Kind::point    ? "point"
                     : d.kind == AngleDistribution::Kind::normal ? "normal"
                                                                 : "uniform";
  return {{"kind", kind}, {"mean", d.mean}, {"stddev", d.stddev}, {"min", d.min}, {"max", d.max}};
}

json disc_json(const DiscriminatorConfig& d) {
  return {{"prefix", d.prefix}, {"base_channels", d.base_channels}, {"layers", d.layers}, {"slope", d.slope}};
}

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

}  // namespace

TrainConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  TrainConfig cfg;
  Section top(root, "");
  section(top, "generator", [&](Section& s) {
    auto& g = cfg.generator;
    s.read("dim_z_s", g.dim_z_s);
    s.read("dim_w_s", g.dim_w_s);
    s.read("dim_z_a", g.dim_z_a);
    s.read("dim_w_a", g.dim_w_a);
    s.read("mapping_layers", g.mapping_layers);
    s.read("nerf_hidden", g.nerf_hidden);
    s.read("nerf_blocks", g.nerf_blocks);
    s.read("dim_v", g.dim_v);
    s.read("omega0", g.omega0);
    s.read("inr_width", g.inr_width);
    s.read("inr_blocks", g.inr_blocks);
    s.read("demod_eps", g.demod_eps);
    s.read("lrelu_slope", g.lrelu_slope);
  });
  section(top, "render", [&](Section& s) {
    s.read("fov", cfg.render.fov);
    s.read("near", cfg.render.near);
    s.read("far", cfg.render.far);
    s.read("samples", cfg.render.samples);
  });
  section(top, "camera", [&](Section& s) {
    read_angle(s, "pitch", cfg.pitch);
    read_angle(s, "yaw", cfg.yaw);
  });
  read_disc(top, "discriminator", cfg.disc);
  read_disc(top, "discriminator_aux", cfg.disc_aux);
  section(top, "data", [&](Section& s) {
    auto& d = cfg.data;
    s.read("radius_min", d.radius_min);
    s.read("radius_max", d.radius_max);
    s.read("max_offset", d.max_offset);
    s.read("background", d.background);
    s.read("ambient", d.ambient);
    read_vec(s, "light", d.light);
    read_vec(s, "marker", d.marker);
    s.read("marker_angle", d.marker_angle);
  });
  if (const json* sched = top.child("schedule")) {
    if (!sched->is_array() || sched->empty()) throw ConfigError("schedule must be a non-empty array");
    cfg.schedule.clear();
    for (std::size_t i = 0; i < sched->size(); ++i) {
      Section s((*sched)[i], "schedule[" + std::to_string(i) + "]");
      Stage stage;
      s.read("step", stage.step);
      s.read("resolution", stage.resolution);
      if (const json* n = s.child("n_r")) {
        if (n->is_string() && n->get<std::string>() == "full") stage.n_r.reset();
        else if (n->is_number_unsigned()) stage.n_r = n->get<std::size_t>();
        else throw ConfigError(s.sub("n_r") + ": expected a non-negative integer or \"full\"");
      }
      s.finish();
      cfg.schedule.push_back(stage);
    }
  }
  section(top, "optimizer", [&](Section& s) {
    s.read("lr_g", cfg.lr_g);
    s.read("lr_d", cfg.lr_d);
    s.read("mapping_lr_mult", cfg.mapping_lr_mult);
    s.read("beta0", cfg.beta0);
    s.read("beta1", cfg.beta1);
    s.read("eps", cfg.adam_eps);
  });
  section(top, "loss", [&](Section& s) {
    s.read("r1_gamma", cfg.r1_gamma);
    s.read("r1_interval", cfg.r1_interval);
    s.read("aux_weight", cfg.aux_weight);
  });
  section(top, "output", [&](Section& s) {
    s.read("dir", cfg.out_dir);
    s.read("checkpoint_every", cfg.checkpoint_every);
    s.read("sample_every", cfg.sample_every);
    s.read("sample_count", cfg.sample_count);
  });
  top.read("steps", cfg.steps);
  top.read("batch_size", cfg.batch_size);
  top.read("seed", cfg.seed);
  top.read("init_generator", cfg.init_generator);
  top.read("freeze_nerf", cfg.freeze_nerf);
  top.finish();
  try {
    validate(cfg);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

TrainConfig load_config(const std::filesystem::path& path) { return parse_config(ckpt::read_file(path)); }

std::string dump_config(const TrainConfig& cfg) {
  const auto& g = cfg.generator;
  json sched = json::array();
  for (const auto& s : cfg.schedule)
    sched.push_back({{"step", s.step}, {"resolution", s.resolution},
                     {"n_r", s.n_r ? json(*s.n_r) : json("full")}});
  const json root = {
      {"generator",
       {{"dim_z_s", g.dim_z_s}, {"dim_w_s", g.dim_w_s}, {"dim_z_a", g.dim_z_a}, {"dim_w_a", g.dim_w_a},
        {"mapping_layers", g.mapping_layers}, {"nerf_hidden", g.nerf_hidden}, {"nerf_blocks", g.nerf_blocks},
        {"dim_v", g.dim_v}, {"omega0", g.omega0}, {"inr_width", g.inr_width}, {"inr_blocks", g.inr_blocks},
        {"demod_eps", g.demod_eps}, {"lrelu_slope", g.lrelu_slope}}},
      {"render",
       {{"fov", cfg.render.fov}, {"near", cfg.render.near}, {"far", cfg.render.far}, {"samples", cfg.render.samples}}},
      {"camera", {{"pitch", angle_json(cfg.pitch)}, {"yaw", angle_json(cfg.yaw)}}},
      {"discriminator", disc_json(cfg.disc)},
      {"discriminator_aux", disc_json(cfg.disc_aux)},
      {"data",
       {{"radius_min", cfg.data.radius_min}, {"radius_max", cfg.data.radius_max}, {"max_offset", cfg.data.max_offset},
        {"background", cfg.data.background}, {"ambient", cfg.data.ambient}, {"light", vec_json(cfg.data.light)},
        {"marker", vec_json(cfg.data.marker)}, {"marker_angle", cfg.data.marker_angle}}},
      {"schedule", sched},
      {"optimizer",
       {{"lr_g", cfg.lr_g}, {"lr_d", cfg.lr_d}, {"mapping_lr_mult", cfg.mapping_lr_mult}, {"beta0", cfg.beta0},
        {"beta1", cfg.beta1}, {"eps", cfg.adam_eps}}},
      {"loss", {{"r1_gamma", cfg.r1_gamma}, {"r1_interval", cfg.r1_interval}, {"aux_weight", cfg.aux_weight}}},
      {"output",
       {{"dir", cfg.out_dir}, {"checkpoint_every", cfg.checkpoint_every}, {"sample_every", cfg.sample_every},
        {"sample_count", cfg.sample_count}}},
      {"steps", cfg.steps},
      {"batch_size", cfg.batch_size},
      {"seed", cfg.seed},
      {"init_generator", cfg.init_generator},
      {"freeze_nerf", cfg.freeze_nerf},
  };
  return root.dump(2) + "\n";
}

}  // namespace cips3d
