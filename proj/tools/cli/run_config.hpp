#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sirtnet/dataio.hpp"
#include "sirtnet/geometry.hpp"
#include "sirtnet/pipeline.hpp"

namespace sirtnet::cli {

/// Bad or inconsistent configuration; maps to its own exit code.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

inline constexpr const char* kDataDirEnv = "SIRTNET_DATA_DIR";

struct PhantomSettings {
  EllipsePhantomSpec spec;
  std::size_t count = 200;
  std::size_t test_count = 50;
  double train_ratio = 0.8;
};

struct TrainingNoise {
  bool enabled = false;  // training data is noiseless by default
  double incident_intensity = 1e4;
};

struct SolverSettings {
  std::size_t sirt_iterations = 200;  // standalone SIRT baseline
  std::size_t cgls_iterations = 50;
};

struct EvaluationSettings {
  std::vector<std::string> methods = {"fbp", "sirt", "cgls", "pipeline"};
  std::vector<double> sweep_intensities = {1e3, 1e4, 1e5, 1e6};
};

struct Paths {
  std::filesystem::path data_dir;        // dataset directory (manifest.json inside)
  std::filesystem::path checkpoint_dir;  // pipeline checkpoint
  std::filesystem::path report_dir;      // evaluation output
};

/// Everything a command needs; every seed below derives from `seed`.
struct RunConfig {
  std::uint64_t seed = 0;
  ProjectionGeometry geometry = ProjectionGeometry::parallel(64, 20);
  PhantomSettings phantoms;
  TrainingNoise noise;
  SolverSettings solvers;
  PipelineConfig pipeline;
  EvaluationSettings evaluation;
  Paths paths;

  std::uint64_t seed_for(const char* subsystem) const;
};

/// Defaults with paths rooted at $SIRTNET_DATA_DIR (or ./data).
RunConfig default_run_config();

/// Unknown keys anywhere are rejected with ConfigError. `pipeline.seed` is not
/// accepted: pipeline randomness derives from the root seed.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path);

bool is_known_method(const std::string& method);

}  // namespace sirtnet::cli
