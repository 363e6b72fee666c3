#include "run_config.hpp"

#include <algorithm>
#include <cstdlib>

#include "sirtnet/error.hpp"
#include "sirtnet/random.hpp"

namespace fs = std::filesystem;

namespace sirtnet::cli {

namespace {

const std::vector<std::string> kMethods = {"fbp", "sirt", "cgls", "pipeline"};

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known,
                    const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
void read_into(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

}  // namespace

std::uint64_t RunConfig::seed_for(const char* subsystem) const {
  return derive_seed(seed, subsystem);
}

RunConfig default_run_config() {
  RunConfig c;
  const char* env = std::getenv(kDataDirEnv);
  const fs::path base = env && *env ? fs::path(env) : fs::path("data");
  c.paths.data_dir = base / "dataset";
  c.paths.checkpoint_dir = base / "checkpoint";
  c.paths.report_dir = base / "report";
  c.pipeline.seed = c.seed_for("pipeline");
  return c;
}

bool is_known_method(const std::string& method) {
  return std::find(kMethods.begin(), kMethods.end(), method) != kMethods.end();
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c = default_run_config();
  reject_unknown(j,
                 {"seed", "geometry", "phantoms", "noise", "solvers", "pipeline", "evaluation",
                  "paths"},
                 "config");
  read_into(j, "seed", c.seed, "config");

  try {
    if (j.contains("geometry")) c.geometry = geometry_from_json(j.at("geometry"));

    if (j.contains("phantoms")) {
      const auto& p = j.at("phantoms");
      reject_unknown(p, {"spec", "count", "test_count", "train_ratio"}, "phantoms");
      if (p.contains("spec")) c.phantoms.spec = phantom_spec_from_json(p.at("spec"));
      read_into(p, "count", c.phantoms.count, "phantoms");
      read_into(p, "test_count", c.phantoms.test_count, "phantoms");
      read_into(p, "train_ratio", c.phantoms.train_ratio, "phantoms");
    }

    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      reject_unknown(n, {"enabled", "incident_intensity"}, "noise");
      read_into(n, "enabled", c.noise.enabled, "noise");
      read_into(n, "incident_intensity", c.noise.incident_intensity, "noise");
    }

    if (j.contains("solvers")) {
      const auto& s = j.at("solvers");
      reject_unknown(s, {"sirt_iterations", "cgls_iterations"}, "solvers");
      read_into(s, "sirt_iterations", c.solvers.sirt_iterations, "solvers");
      read_into(s, "cgls_iterations", c.solvers.cgls_iterations, "solvers");
    }

    if (j.contains("pipeline")) {
      if (j.at("pipeline").is_object() && j.at("pipeline").contains("seed")) {
        throw ConfigError("pipeline.seed: set the root 'seed' instead");
      }
      c.pipeline = pipeline_config_from_json(j.at("pipeline"));
    }

    if (j.contains("evaluation")) {
      const auto& e = j.at("evaluation");
      reject_unknown(e, {"methods", "sweep_intensities"}, "evaluation");
      read_into(e, "methods", c.evaluation.methods, "evaluation");
      read_into(e, "sweep_intensities", c.evaluation.sweep_intensities, "evaluation");
    }

    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      reject_unknown(p, {"data_dir", "checkpoint_dir", "report_dir"}, "paths");
      auto path_key = [&](const char* key, fs::path& out) {
        std::string s = out.string();
        read_into(p, key, s, "paths");
        out = s;
      };
      path_key("data_dir", c.paths.data_dir);
      path_key("checkpoint_dir", c.paths.checkpoint_dir);
      path_key("report_dir", c.paths.report_dir);
    }
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }

  c.pipeline.seed = c.seed_for("pipeline");

  if (c.phantoms.count < 1) throw ConfigError("phantoms.count must be >= 1");
  if (!(c.phantoms.train_ratio > 0.0 && c.phantoms.train_ratio < 1.0)) {
    throw ConfigError("phantoms.train_ratio must be in (0, 1)");
  }
  if (!(c.noise.incident_intensity > 0.0)) {
    throw ConfigError("noise.incident_intensity must be > 0");
  }
  if (c.solvers.cgls_iterations == 0) throw ConfigError("solvers.cgls_iterations must be >= 1");
  for (const auto& m : c.evaluation.methods) {
    if (!is_known_method(m)) throw ConfigError("evaluation.methods: unknown method '" + m + "'");
  }
  for (double i0 : c.evaluation.sweep_intensities) {
    if (!(i0 > 0.0)) throw ConfigError("evaluation.sweep_intensities must be > 0");
  }
  return c;
}

nlohmann::json run_config_to_json(const RunConfig& c) {
  nlohmann::json pipeline = pipeline_config_to_json(c.pipeline);
  pipeline.erase("seed");
  return {{"seed", c.seed},
          {"geometry", c.geometry},
          {"phantoms",
           {{"spec", c.phantoms.spec},
            {"count", c.phantoms.count},
            {"test_count", c.phantoms.test_count},
            {"train_ratio", c.phantoms.train_ratio}}},
          {"noise",
           {{"enabled", c.noise.enabled}, {"incident_intensity", c.noise.incident_intensity}}},
          {"solvers",
           {{"sirt_iterations", c.solvers.sirt_iterations},
            {"cgls_iterations", c.solvers.cgls_iterations}}},
          {"pipeline", pipeline},
          {"evaluation",
           {{"methods", c.evaluation.methods},
            {"sweep_intensities", c.evaluation.sweep_intensities}}},
          {"paths",
           {{"data_dir", c.paths.data_dir.string()},
            {"checkpoint_dir", c.paths.checkpoint_dir.string()},
            {"report_dir", c.paths.report_dir.string()}}}};
}

RunConfig load_run_config(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return run_config_from_json(j);
}

}  // namespace sirtnet::cli
