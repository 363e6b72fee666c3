#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli/commands.hpp"
#include "cli/run_config.hpp"
#include "sirtnet/dataio.hpp"
#include "sirtnet/pipeline.hpp"

using namespace sirtnet;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sirtnet_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    write_config(base_config());
  }
  void TearDown() override { fs::remove_all(dir_); }

  nlohmann::json base_config() const {
    return {{"seed", 5},
            {"geometry", {{"image_size", 12}, {"n_angles", 4}}},
            {"phantoms", {{"count", 4}, {"test_count", 2}, {"train_ratio", 0.5}}},
            {"solvers", {{"sirt_iterations", 6}, {"cgls_iterations", 3}}},
            {"pipeline",
             {{"sirt_iterations", 2},
              {"stages", 2},
              {"epochs", 2},
              {"batch_size", 1},
              {"network", {{"depth", 2}}}}},
            {"evaluation", {{"sweep_intensities", {1e3, 1e5}}}},
            {"paths",
             {{"data_dir", (dir_ / "data").string()},
              {"checkpoint_dir", (dir_ / "ckpt").string()},
              {"report_dir", (dir_ / "report").string()}}}};
  }

  void write_config(const nlohmann::json& j) {
    std::ofstream(dir_ / "run.json") << j.dump(2);
  }

  Result cli(std::vector<std::string> args) {
    args.insert(args.begin(), {"-c", (dir_ / "run.json").string()});
    return run_cli(args);
  }

  fs::path dir_;
};

std::size_t data_rows(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  std::size_t rows = 0;
  std::getline(in, line);
  while (std::getline(in, line)) rows += !line.empty();
  return rows;
}

}  // namespace

TEST(RunConfig, DefaultsAndValidation) {
  const auto c = cli::default_run_config();
  EXPECT_EQ(c.geometry.image_size(), 64u);
  EXPECT_EQ(c.geometry.n_angles(), 20u);
  EXPECT_EQ(c.pipeline.seed, c.seed_for("pipeline"));
  const auto j = cli::run_config_to_json(c);
  EXPECT_EQ(cli::run_config_to_json(cli::run_config_from_json(j)), j);

  auto bad = j;
  bad["typo"] = 1;
  EXPECT_THROW(cli::run_config_from_json(bad), cli::ConfigError);
  bad = j;
  bad["pipeline"]["seed"] = 3;
  EXPECT_THROW(cli::run_config_from_json(bad), cli::ConfigError);
  bad = j;
  bad["evaluation"]["methods"] = {"sirt", "magic"};
  EXPECT_THROW(cli::run_config_from_json(bad), cli::ConfigError);
  bad = j;
  bad["noise"]["incident_intensity"] = 0;
  EXPECT_THROW(cli::run_config_from_json(bad), cli::ConfigError);
  bad = j;
  bad["geometry"]["image_size"] = 0;
  EXPECT_THROW(cli::run_config_from_json(bad), cli::ConfigError);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, cli::kExitConfig);
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitConfig);
  EXPECT_EQ(run_cli({"--help"}).code, cli::kExitOk);
  EXPECT_EQ(run_cli({"-c", "/nonexistent/run.json", "phantoms"}).code, cli::kExitConfig);
}

TEST_F(CliTest, PhantomsSingleImage) {
  const auto r = cli({"phantoms", "--count", "1", "--test-count", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "data" / "images")) {
    files += e.path().extension() == ".f32";
  }
  EXPECT_EQ(files, 1u);
  EXPECT_TRUE(fs::exists(dir_ / "data" / "run_config.json"));
  EXPECT_NO_THROW(load_manifest(dir_ / "data" / "manifest.json"));
  // One sample cannot be split into train and validation.
  EXPECT_EQ(cli({"train", "-q"}).code, cli::kExitConfig);
}

TEST_F(CliTest, PhantomsAreSeeded) {
  ASSERT_EQ(cli({"phantoms"}).code, 0);
  const auto first = read_text(dir_ / "data" / "manifest.json");
  const auto image = read_image(dir_ / "data" / "images" / "sample_0000.f32");
  ASSERT_EQ(cli({"phantoms"}).code, 0);
  EXPECT_EQ(read_text(dir_ / "data" / "manifest.json"), first);
  EXPECT_EQ(read_image(dir_ / "data" / "images" / "sample_0000.f32"), image);
  ASSERT_EQ(cli({"--seed", "6", "phantoms"}).code, 0);
  EXPECT_NE(read_image(dir_ / "data" / "images" / "sample_0000.f32"), image);
}

TEST_F(CliTest, SimulateAndReconstruct) {
  const Image img = generate_phantoms({}, 1, 12, 1)[0];
  write_image(dir_ / "x.f32", img);
  ASSERT_EQ(cli({"simulate", "-i", (dir_ / "x.f32").string(), "-o", (dir_ / "p.f32").string()}).code, 0);
  const Sinogram p = read_sinogram(dir_ / "p.f32");
  EXPECT_EQ(p, forward_project(img, ProjectionGeometry::parallel(12, 4)));
  EXPECT_TRUE(fs::exists(dir_ / "p.f32.run.json"));

  ASSERT_EQ(cli({"simulate", "-i", (dir_ / "x.f32").string(), "-o", (dir_ / "n.f32").string(),
                 "--i0", "100"})
                .code,
            0);
  EXPECT_NE(read_sinogram(dir_ / "n.f32"), p);

  const auto out = (dir_ / "r.f32").string();
  ASSERT_EQ(cli({"reconstruct", "-m", "sirt", "--iterations", "0", "-i", (dir_ / "p.f32").string(),
                 "-o", out})
                .code,
            0);
  const auto result_1 = read_image(out);
  for (float v : result_1.values()) EXPECT_EQ(v, 0.0f);

  for (const char* m : {"fbp", "sirt", "cgls"}) {
    const auto r = cli({"reconstruct", "-m", m, "-i", (dir_ / "p.f32").string(), "-o", out, "--pgm"});
    EXPECT_EQ(r.code, 0) << m << r.err;
  }
  EXPECT_TRUE(fs::exists(out + ".pgm"));
  EXPECT_EQ(read_image(out), cgls(p, ProjectionGeometry::parallel(12, 4), 3));

  EXPECT_EQ(cli({"reconstruct", "-m", "art", "-i", (dir_ / "p.f32").string(), "-o", out}).code,
            cli::kExitConfig);
  EXPECT_EQ(cli({"reconstruct", "-m", "pipeline", "-i", (dir_ / "p.f32").string(), "-o", out}).code,
            cli::kExitConfig);
  write_sinogram(dir_ / "wrong.f32", Sinogram(5, 17));
  EXPECT_EQ(cli({"reconstruct", "-m", "sirt", "-i", (dir_ / "wrong.f32").string(), "-o", out}).code,
            cli::kExitRuntime);
}

TEST_F(CliTest, TrainReconstructEvaluate) {
  ASSERT_EQ(cli({"phantoms"}).code, 0);
  const auto t = cli({"train"});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_NE(t.out.find("stage 2 epoch 2"), std::string::npos);
  EXPECT_EQ(data_rows(dir_ / "ckpt" / "losses.csv"), 2u * 2u);
  EXPECT_TRUE(fs::exists(dir_ / "ckpt" / "run_config.json"));

  const auto again = cli({"train"});
  EXPECT_EQ(again.code, 0);
  EXPECT_NE(again.out.find("already matches"), std::string::npos);

  auto changed = base_config();
  changed["pipeline"]["epochs"] = 3;
  write_config(changed);
  EXPECT_EQ(cli({"train", "-q"}).code, cli::kExitConfig);
  write_config(base_config());

  // Pipeline reconstruction with every network zeroed is plain SIRT.
  auto ckpt = load_checkpoint(dir_ / "ckpt");
  for (auto& net : ckpt.networks) {
    std::vector<float> zero(net.parameters().size(), 0.0f);
    net.set_parameters(zero);
  }
  save_checkpoint(dir_ / "zero", ckpt);
  const auto sino = (dir_ / "data" / "sinograms" / "test_0000.f32").string();
  const auto out = (dir_ / "z.f32").string();
  const auto r = cli({"--checkpoint", (dir_ / "zero").string(), "reconstruct", "-m", "pipeline", "-i",
                      sino, "-o", out, "--intermediates", (dir_ / "blocks").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_image(out),
            sirt_run(ckpt.geometry.make_image(), read_sinogram(sino), ckpt.geometry, 3 * 2));
  EXPECT_TRUE(fs::exists(dir_ / "blocks" / "01_sirt_1.f32"));
  EXPECT_TRUE(fs::exists(dir_ / "blocks" / "04_dnn_2.f32"));
  EXPECT_TRUE(fs::exists(dir_ / "blocks" / "05_sirt_final.f32"));

  const auto e = cli({"evaluate"});
  ASSERT_EQ(e.code, 0) << e.err;
  const auto report = dir_ / "report";
  EXPECT_EQ(data_rows(report / "image_metrics.csv"), 4u * 2u);
  EXPECT_EQ(data_rows(report / "sinogram_metrics.csv"), 4u * 2u);
  EXPECT_EQ(data_rows(report / "intermediates.csv"), 5u * 2u);
  EXPECT_TRUE(fs::exists(report / "report.txt"));
  EXPECT_TRUE(fs::exists(report / "run_config.json"));
  EXPECT_TRUE(fs::exists(report / "sweep_1e+03.csv"));
  EXPECT_TRUE(fs::exists(report / "sweep_1e+05.csv"));
  EXPECT_EQ(data_rows(report / "sweep_summary.csv"), 2u * 4u);

  const auto first = read_text(report / "sweep_1e+03.csv");
  ASSERT_EQ(cli({"--threads", "2", "sweep-noise"}).code, 0);
  EXPECT_EQ(read_text(report / "sweep_1e+03.csv"), first);

  const auto i = cli({"inspect-checkpoint"});
  EXPECT_EQ(i.code, 0);
  EXPECT_NE(i.out.find("parameters per network"), std::string::npos);
}

TEST_F(CliTest, EvaluateNeedsTestSamples) {
  auto j = base_config();
  j["phantoms"]["test_count"] = 0;
  j["evaluation"]["methods"] = {"sirt"};
  write_config(j);
  ASSERT_EQ(cli({"phantoms"}).code, 0);
  const auto r = cli({"evaluate"});
  EXPECT_EQ(r.code, cli::kExitConfig);
  EXPECT_NE(r.err.find("empty"), std::string::npos);
}

TEST_F(CliTest, TrainRefusesGeometryMismatch) {
  ASSERT_EQ(cli({"phantoms"}).code, 0);
  auto j = base_config();
  j["geometry"]["n_angles"] = 5;
  write_config(j);
  EXPECT_EQ(cli({"train"}).code, cli::kExitConfig);
}
