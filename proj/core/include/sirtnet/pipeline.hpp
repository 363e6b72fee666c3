#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sirtnet/dataio.hpp"
#include "sirtnet/geometry.hpp"
#include "sirtnet/network.hpp"
#include "sirtnet/solvers.hpp"

namespace sirtnet {

struct NetworkConfig {
  std::size_t depth = 15;
  std::size_t dilation_modulus = 10;
  double init_low = -0.25;
  double init_high = 0.25;
};

/// Interleaved SIRT/DNN schedule and training settings.
struct PipelineConfig {
  std::size_t sirt_iterations = 10;  // N, per block
  std::size_t stages = 10;           // MaxNet
  std::size_t epochs = 100;          // MaxEpoches per network
  bool final_sirt = true;
  std::size_t batch_size = 10;
  bool cache_stage_inputs = false;
  std::size_t threads = 1;  // not part of the reproducibility contract
  NetworkConfig network;
  AdamConfig adam;
  std::uint64_t seed = 0;

  void validate() const;
};

/// JSON round trip; unknown keys are rejected. `threads` is excluded from
/// the document so that thread count never invalidates a checkpoint.
nlohmann::json pipeline_config_to_json(const PipelineConfig& config);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

struct StageLosses {
  double initial_validation = 0.0;     // before the first epoch
  std::vector<double> train;           // one per epoch
  std::vector<double> validation;      // one per epoch, after the epoch
};

struct PipelineCheckpoint {
  PipelineConfig config;
  ProjectionGeometry geometry = ProjectionGeometry::parallel(1, 1);
  std::vector<MsdNetwork> networks;  // stage order
  std::vector<StageLosses> losses;   // stage order
};

/// GT - x, where x is the output of a SIRT block.
Image residual_target(const Image& truth, const Image& x_after_sirt);

/// x + msd(x): the next SIRT block's starting point.
Image apply_regularization(const Image& x, const MsdNetwork& net);

/// Reconstruction entering stage `stage` (0-based) after its SIRT block:
/// SIRT(N) → net_0 → … → net_{stage-1} → SIRT(N), starting from zero.
Image stage_input(const Sinogram& p, const ProjectionGeometry& geom,
                  std::span<const MsdNetwork> networks, std::size_t stage,
                  std::size_t sirt_iterations,
                  std::shared_ptr<const SirtWeights> weights = nullptr);

/// Training pairs (stage input → residual) for every sample.
Batch stage_training_pairs(std::span<const Sample> samples, const ProjectionGeometry& geom,
                           std::span<const MsdNetwork> networks, std::size_t stage,
                           std::size_t sirt_iterations, std::size_t threads = 1);

using TrainingObserver =
    std::function<void(std::size_t stage, std::size_t epoch, double train_loss, double val_loss)>;

/// Trains `config.stages` networks in sequence. Network 0 starts from
/// uniform[init_low, init_high); network s > 0 starts from network s-1.
/// Throws TrainingDiverged on a non-finite loss.
PipelineCheckpoint train_pipeline(std::span<const Sample> train_set,
                                  std::span<const Sample> validation_set,
                                  const ProjectionGeometry& geom, const PipelineConfig& config,
                                  const TrainingObserver& observer = {});

enum class BlockKind { sirt, dnn };

struct Intermediate {
  BlockKind kind;
  std::size_t stage;  // 0-based; the final SIRT block carries stage == networks.size()
  Image image;
};

struct Reconstruction {
  Image image;
  std::vector<Intermediate> intermediates;
};

/// x = 0; for each network: SIRT(N) then x += net(x); optional final SIRT(N).
Reconstruction reconstruct(const Sinogram& p, const ProjectionGeometry& geom,
                           std::span<const MsdNetwork> networks, std::size_t sirt_iterations,
                           bool final_sirt,
                           std::shared_ptr<const SirtWeights> weights = nullptr);
Reconstruction reconstruct(const Sinogram& p, const ProjectionGeometry& geom,
                           const PipelineCheckpoint& checkpoint);

// -------------------------------------------------------------- persistence

/// Model file: 8-byte magic "SIRTMSD1", uint64 little-endian header length,
/// UTF-8 JSON header, then parameter_count float32 little-endian values in
/// MsdArchitecture layout order.
void write_model(const std::filesystem::path& path, const MsdNetwork& net,
                 const nlohmann::json& metadata);
MsdNetwork read_model(const std::filesystem::path& path, nlohmann::json* header = nullptr);
nlohmann::json read_model_header(const std::filesystem::path& path);

/// Directory with config.json, model_01.msd … model_NN.msd and losses.csv.
void save_checkpoint(const std::filesystem::path& dir, const PipelineCheckpoint& checkpoint);
PipelineCheckpoint load_checkpoint(const std::filesystem::path& dir);

std::string format_losses_csv(const PipelineCheckpoint& checkpoint);

}  // namespace sirtnet
