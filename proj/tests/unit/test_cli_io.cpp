#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cips3d/checkpoint.hpp"
#include "cips3d/image_io.hpp"
#include "cips3d/run_config.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace cips3d;
namespace fs = std::filesystem;
using ad::Tensor;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("cips3d_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) { return ckpt::read_file(path); }

int run_cli(const std::string& args, const fs::path& stdout_path = "/dev/null",
            const fs::path& stderr_path = "/dev/null") {
  const std::string cmd = std::string(CIPS3D_CLI_PATH) + " " + args + " > " + stdout_path.string() + " 2> " +
                          stderr_path.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

constexpr const char* kTinyGenerator = R"("generator": {"dim_z_s": 4, "dim_w_s": 4, "dim_z_a": 4, "dim_w_a": 4,
  "mapping_layers": 2, "nerf_hidden": 6, "dim_v": 4, "inr_width": 5})";

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
}

}  // namespace

TEST(Checkpoint, RoundTripIsByteIdentical) {
  const auto p = init_generator<float>(test::tiny_generator(), 1);
  const auto bytes = ckpt::serialize(p);
  const auto loaded = ckpt::deserialize(bytes);
  EXPECT_TRUE(test::params_bit_equal(p, loaded));
  EXPECT_EQ(ckpt::serialize(loaded), bytes);
  EXPECT_EQ(bytes.substr(0, 7), std::string("CIPS3D\0", 7));
}

TEST(Checkpoint, HeaderLayout) {
  ParamSet<float> p;
  p.add("a", Tensor<float>({2}, {1.0f, -2.0f}));
  const auto b = ckpt::serialize(p);
  const std::string expected = std::string("CIPS3D\0", 7) + std::string("\x01\0\0\0", 4) + std::string("\x01\0\0\0", 4) +
                               std::string("\x01\0", 2) + "a" + std::string("\x01", 1) + std::string("\x02\0\0\0", 4) +
                               std::string("\0", 1) + std::string("\0\0\x80\x3f", 4) + std::string("\0\0\0\xc0", 4);
  EXPECT_EQ(b, expected);
}

TEST(Checkpoint, CorruptionIsAHardError) {
  const auto bytes = ckpt::serialize(init_generator<float>(test::tiny_generator(), 1));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(ckpt::deserialize(bad_magic), ckpt::CheckpointError);
  auto bad_version = bytes;
  bad_version[7] = 2;
  EXPECT_THROW(ckpt::deserialize(bad_version), ckpt::CheckpointError);
  EXPECT_THROW(ckpt::deserialize(std::string_view(bytes).substr(0, bytes.size() - 1)), ckpt::CheckpointError);
  EXPECT_THROW(ckpt::deserialize(bytes + "x"), ckpt::CheckpointError);
}

TEST(Checkpoint, SaveIsAtomicAndLoads) {
  const auto dir = scratch_dir("ckpt");
  const auto p = init_generator<float>(test::tiny_generator(), 3);
  ckpt::save(dir / "g.ckpt", p);
  EXPECT_FALSE(fs::exists(dir / "g.ckpt.tmp"));
  EXPECT_TRUE(test::params_bit_equal(ckpt::load(dir / "g.ckpt"), p));
  EXPECT_EQ(infer_config(ckpt::load(dir / "g.ckpt")), test::tiny_generator());
  fs::remove_all(dir);
}

TEST(RunConfig, RoundTrip) {
  auto cfg = test::tiny_train_config("runs/x");
  cfg.yaw = AngleDistribution::uniform(0.5, 2.5);
  cfg.pitch = AngleDistribution::point(1.4);
  EXPECT_EQ(parse_config(dump_config(cfg)), cfg);
  EXPECT_EQ(parse_config("{}"), TrainConfig{});
}

TEST(RunConfig, UnknownKeysAreRejected) {
  EXPECT_THROW(parse_config(R"({"stepz": 3})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"generator": {"dim_q": 3}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"camera": {"yaw": {"kind": "normal", "sigma": 1}}})"), ConfigError);
  EXPECT_THROW(parse_config("{not json"), ConfigError);
  EXPECT_THROW(parse_config(R"({"steps": "many"})"), ConfigError);
}

TEST(RunConfig, OversizedRayCountIsRejected) {
  EXPECT_THROW(parse_config(R"({"schedule": [{"step": 0, "resolution": 4, "n_r": 17}]})"), ConfigError);
  const auto ok = parse_config(R"({"schedule": [{"step": 0, "resolution": 4, "n_r": 16}, {"step": 9, "resolution": 8, "n_r": "full"}]})");
  EXPECT_EQ(ok.schedule[1].rays(), 64u);
}

TEST(Image, ByteMapping) {
  EXPECT_EQ(image::to_byte(0.0), 128);
  EXPECT_EQ(image::to_byte(50.0), 255);
  EXPECT_EQ(image::to_byte(-50.0), 0);
  EXPECT_EQ(image::to_byte(std::atanh(0.5)), static_cast<std::uint8_t>(std::lround(255 * 0.75)));
}

TEST(Image, PpmRoundTripAndGrid) {
  const auto dir = scratch_dir("ppm");
  Rng rng = make_rng(4);
  const auto imgs = test::random_tensor<float>(rng, {6, 3, 2, 3});
  const auto g = image::grid(imgs, 4);
  EXPECT_EQ(g.height, 6u);
  EXPECT_EQ(g.width, 8u);
  const auto first = image::to_rgb8(imgs, 0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(g.pixels[i * 8 * 3 + j], first.pixels[i * 2 * 3 + j]);
  image::write_ppm(dir / "g.ppm", g);
  const auto back = image::read_ppm(dir / "g.ppm");
  EXPECT_EQ(back.pixels, g.pixels);
  EXPECT_EQ(slurp(dir / "g.ppm").substr(0, 9), "P6\n8 6\n25");
  fs::remove_all(dir);
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir = new fs::path(scratch_dir("cmd"));
    write_text(*dir / "tiny.json", std::string("{") + kTinyGenerator + "}");
    ASSERT_EQ(run_cli("init-model --seed 3 --config " + (*dir / "tiny.json").string() + " --out " +
                      (*dir / "g.ckpt").string()),
              0);
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir);
    delete dir;
  }
  static fs::path* dir;
};

fs::path* Cli::dir = nullptr;

TEST_F(Cli, RenderIsDeterministicAndSized) {
  const std::string common = "render --checkpoint " + (*dir / "g.ckpt").string() + " --seed-zs 1 --seed-za 2 --size 16";
  ASSERT_EQ(run_cli(common + " --out " + (*dir / "a.ppm").string()), 0);
  ASSERT_EQ(run_cli(common + " --out " + (*dir / "b.ppm").string()), 0);
  EXPECT_EQ(slurp(*dir / "a.ppm"), slurp(*dir / "b.ppm"));
  EXPECT_EQ(slurp(*dir / "a_nerf.ppm"), slurp(*dir / "b_nerf.ppm"));
  const auto img = image::read_ppm(*dir / "a.ppm");
  EXPECT_EQ(img.width, 16u);
  EXPECT_EQ(img.height, 16u);
  EXPECT_EQ(image::read_ppm(*dir / "a_nerf.ppm").width, 16u);
}

TEST_F(Cli, RenderRefusesBadCheckpoint) {
  write_text(*dir / "bad.ckpt", "NOTACHECKPOINT");
  EXPECT_EQ(run_cli("render --checkpoint " + (*dir / "bad.ckpt").string() + " --out " + (*dir / "x.ppm").string()), 1);
  EXPECT_FALSE(fs::exists(*dir / "x.ppm"));
}

TEST_F(Cli, SweepWritesOrderedFrames) {
  ASSERT_EQ(run_cli("sweep-yaw --checkpoint " + (*dir / "g.ckpt").string() + " --frames 5 --size 8 --out-dir " +
                    (*dir / "sweep").string()),
            0);
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(*dir / "sweep")) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  EXPECT_EQ(names, (std::vector<std::string>{"frame_0000.ppm", "frame_0000_nerf.ppm", "frame_0001.ppm",
                                             "frame_0001_nerf.ppm", "frame_0002.ppm", "frame_0002_nerf.ppm",
                                             "frame_0003.ppm", "frame_0003_nerf.ppm", "frame_0004.ppm",
                                             "frame_0004_nerf.ppm"}));
  EXPECT_NE(slurp(*dir / "sweep/frame_0000.ppm"), slurp(*dir / "sweep/frame_0004.ppm"));
}

TEST_F(Cli, BenchReportsEquivalence) {
  ASSERT_EQ(run_cli("bench-modfc --batch 2 --seq 4 --dim 1 --iters 3 --warmup 1", *dir / "bench.txt"), 0);
  const auto out = slurp(*dir / "bench.txt");
  const auto at = out.find("max |diff|");
  ASSERT_NE(at, std::string::npos) << out;
  EXPECT_LT(std::stod(out.substr(at + 10)), 1e-5);
  EXPECT_NE(out.find("speedup"), std::string::npos);
}

TEST_F(Cli, PosencCsv) {
  ASSERT_EQ(run_cli("analyze-posenc --l-max 10 --out " + (*dir / "curve.csv").string(), "/dev/null",
                    *dir / "report.txt"),
            0);
  const auto csv = slurp(*dir / "curve.csv");
  EXPECT_EQ(csv.substr(0, 19), "L,d_ab,d_ac\n0,0.174");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 12);
  EXPECT_NE(slurp(*dir / "report.txt").find("crossover L*="), std::string::npos);
  ASSERT_EQ(run_cli("analyze-posenc --l-max 2 --a 0,0,0 --b 1,0,0 --c 0,0,0", *dir / "stdout.csv"), 0);
  EXPECT_EQ(slurp(*dir / "stdout.csv"), "L,d_ab,d_ac\n0,1,0\n1,2.23606798,0\n2,2.23606798,0\n");
}

TEST_F(Cli, SurgeryCommands) {
  const auto g = (*dir / "g.ckpt").string();
  ASSERT_EQ(run_cli("interp-models --base " + g + " --transferred " + g + " --alpha 0.3 --out " +
                    (*dir / "i.ckpt").string()),
            0);
  EXPECT_EQ(slurp(*dir / "i.ckpt").size(), slurp(*dir / "g.ckpt").size());
  ASSERT_EQ(run_cli("swap-models --base " + g + " --transferred " + g + " --from-block 9 --out " +
                    (*dir / "s.ckpt").string()),
            0);
  EXPECT_EQ(slurp(*dir / "s.ckpt"), slurp(*dir / "g.ckpt"));
  EXPECT_NE(run_cli("swap-models --base " + g + " --transferred " + g + " --from-block 10 --out " +
                    (*dir / "s2.ckpt").string()),
            0);
}

TEST_F(Cli, ProbeSymmetry) {
  ASSERT_EQ(run_cli("probe-symmetry --checkpoint " + (*dir / "g.ckpt").string() + " --theta 1.2 --size 8",
                    *dir / "probe.txt"),
            0);
  EXPECT_EQ(slurp(*dir / "probe.txt").rfind("symmetry score ", 0), 0u);
}

TEST_F(Cli, TrainRejectsBadConfigs) {
  write_text(*dir / "bad_nr.json", R"({"schedule": [{"step": 0, "resolution": 4, "n_r": 17}]})");
  EXPECT_EQ(run_cli("train " + (*dir / "bad_nr.json").string()), 2);
  write_text(*dir / "bad_key.json", R"({"unknown": 1})");
  EXPECT_EQ(run_cli("train " + (*dir / "bad_key.json").string()), 2);
}

TEST_F(Cli, TrainIsDeterministic) {
  auto config = [&](const std::string& out) {
    return std::string("{") + kTinyGenerator +
           R"(, "discriminator": {"base_channels": 4}, "discriminator_aux": {"base_channels": 2},
              "render": {"samples": 4}, "schedule": [{"step": 0, "resolution": 8, "n_r": 20}],
              "steps": 4, "batch_size": 2, "seed": 9,
              "output": {"dir": ")" + (*dir / out).string() + R"(", "checkpoint_every": 0, "sample_every": 0}})";
  };
  write_text(*dir / "t1.json", config("run1"));
  write_text(*dir / "t2.json", config("run2"));
  ASSERT_EQ(run_cli("train " + (*dir / "t1.json").string()), 0);
  ASSERT_EQ(run_cli("train " + (*dir / "t2.json").string()), 0);
  EXPECT_EQ(slurp(*dir / "run1/generator.ckpt"), slurp(*dir / "run2/generator.ckpt"));
  EXPECT_EQ(slurp(*dir / "run1/loss.csv"), slurp(*dir / "run2/loss.csv"));
  const auto snapshot = load_config(*dir / "run1/config.json");
  EXPECT_EQ(snapshot.steps, 4u);
  EXPECT_EQ(snapshot.generator, test::tiny_generator());
}
