#include "sirtnet/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "sirtnet/error.hpp"
#include "sirtnet/parallel.hpp"
#include "sirtnet/random.hpp"

namespace fs = std::filesystem;

namespace sirtnet {

void PipelineConfig::validate() const {
  if (sirt_iterations == 0) throw InvalidInput("pipeline: sirt_iterations (N) must be >= 1");
  if (stages == 0) throw InvalidInput("pipeline: stages (MaxNet) must be >= 1");
  if (epochs == 0) throw InvalidInput("pipeline: epochs (MaxEpoches) must be >= 1");
  if (batch_size == 0) throw InvalidInput("pipeline: batch_size must be >= 1");
  if (network.depth == 0) throw InvalidInput("pipeline: network depth must be >= 1");
  if (network.dilation_modulus == 0) throw InvalidInput("pipeline: dilation modulus must be >= 1");
  if (!(network.init_low < network.init_high)) {
    throw InvalidInput("pipeline: init_low must be below init_high");
  }
  if (!(adam.learning_rate >= 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) ||
      !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) || !(adam.epsilon > 0.0)) {
    throw InvalidInput("pipeline: invalid ADAM hyperparameters");
  }
}

namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known,
                    const std::string& where) {
  if (!j.is_object()) throw InvalidInput(where + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      throw InvalidInput(where + ": unknown key '" + key + "'");
    }
  }
}

nlohmann::json adam_to_json(const AdamConfig& a) {
  return {{"learning_rate", a.learning_rate},
          {"beta1", a.beta1},
          {"beta2", a.beta2},
          {"epsilon", a.epsilon}};
}

}  // namespace

nlohmann::json pipeline_config_to_json(const PipelineConfig& c) {
  return {{"sirt_iterations", c.sirt_iterations},
          {"stages", c.stages},
          {"epochs", c.epochs},
          {"final_sirt", c.final_sirt},
          {"batch_size", c.batch_size},
          {"cache_stage_inputs", c.cache_stage_inputs},
          {"network",
           {{"depth", c.network.depth},
            {"dilation_modulus", c.network.dilation_modulus},
            {"init_low", c.network.init_low},
            {"init_high", c.network.init_high}}},
          {"adam", adam_to_json(c.adam)},
          {"seed", c.seed}};
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  reject_unknown(j,
                 {"sirt_iterations", "stages", "epochs", "final_sirt", "batch_size",
                  "cache_stage_inputs", "network", "adam", "seed"},
                 "pipeline");
  try {
    c.sirt_iterations = j.value("sirt_iterations", c.sirt_iterations);
    c.stages = j.value("stages", c.stages);
    c.epochs = j.value("epochs", c.epochs);
    c.final_sirt = j.value("final_sirt", c.final_sirt);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.cache_stage_inputs = j.value("cache_stage_inputs", c.cache_stage_inputs);
    c.seed = j.value("seed", c.seed);
    if (j.contains("network")) {
      const auto& n = j.at("network");
      reject_unknown(n, {"depth", "dilation_modulus", "init_low", "init_high"}, "pipeline.network");
      c.network.depth = n.value("depth", c.network.depth);
      c.network.dilation_modulus = n.value("dilation_modulus", c.network.dilation_modulus);
      c.network.init_low = n.value("init_low", c.network.init_low);
      c.network.init_high = n.value("init_high", c.network.init_high);
    }
    if (j.contains("adam")) {
      const auto& a = j.at("adam");
      reject_unknown(a, {"learning_rate", "beta1", "beta2", "epsilon"}, "pipeline.adam");
      c.adam.learning_rate = a.value("learning_rate", c.adam.learning_rate);
      c.adam.beta1 = a.value("beta1", c.adam.beta1);
      c.adam.beta2 = a.value("beta2", c.adam.beta2);
      c.adam.epsilon = a.value("epsilon", c.adam.epsilon);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("pipeline: ") + e.what());
  }
  c.validate();
  return c;
}

Image residual_target(const Image& truth, const Image& x_after_sirt) {
  if (truth.size() != x_after_sirt.size()) throw InvalidInput("residual_target: size mismatch");
  Image out(truth.size());
  const auto t = truth.values();
  const auto x = x_after_sirt.values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = t[i] - x[i];
  return out;
}

Image apply_regularization(const Image& x, const MsdNetwork& net) {
  const Image residual = msd_infer(net, x);
  Image out(x.size());
  const auto xv = x.values();
  const auto rv = residual.values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = xv[i] + rv[i];
  return out;
}

Image stage_input(const Sinogram& p, const ProjectionGeometry& geom,
                  std::span<const MsdNetwork> networks, std::size_t stage,
                  std::size_t sirt_iterations, std::shared_ptr<const SirtWeights> weights) {
  if (stage > networks.size()) throw InvalidInput("stage_input: stage exceeds trained networks");
  if (!weights) weights = SirtWeights::compute(geom);
  Image x = geom.make_image();
  for (std::size_t s = 0; s < stage; ++s) {
    x = sirt_run(x, p, geom, sirt_iterations, weights);
    x = apply_regularization(x, networks[s]);
  }
  return sirt_run(x, p, geom, sirt_iterations, weights);
}

Batch stage_training_pairs(std::span<const Sample> samples, const ProjectionGeometry& geom,
                           std::span<const MsdNetwork> networks, std::size_t stage,
                           std::size_t sirt_iterations, std::size_t threads) {
  const auto weights = SirtWeights::compute(geom);
  Batch batch;
  batch.inputs.resize(samples.size());
  batch.targets.resize(samples.size());
  parallel_for(samples.size(), threads, [&](std::size_t k) {
    batch.inputs[k] =
        stage_input(samples[k].sinogram, geom, networks, stage, sirt_iterations, weights);
    batch.targets[k] = residual_target(samples[k].truth, batch.inputs[k]);
  });
  return batch;
}

PipelineCheckpoint train_pipeline(std::span<const Sample> train_set,
                                  std::span<const Sample> validation_set,
                                  const ProjectionGeometry& geom, const PipelineConfig& config,
                                  const TrainingObserver& observer) {
  config.validate();
  if (train_set.empty()) throw InvalidInput("train_pipeline: empty training set");
  if (validation_set.empty()) throw InvalidInput("train_pipeline: empty validation set");
  for (const auto* set : {&train_set, &validation_set}) {
    for (const auto& s : *set) {
      geom.require_image(s.truth);
      geom.require_sinogram(s.sinogram);
    }
  }

  PipelineCheckpoint ckpt;
  ckpt.config = config;
  ckpt.geometry = geom;
  const auto weights = SirtWeights::compute(geom);
  const std::size_t N = config.sirt_iterations;

  // Cached path: reconstructions after the previous stage's DNN block.
  std::vector<Image> train_state(train_set.size(), geom.make_image());
  std::vector<Image> val_state(validation_set.size(), geom.make_image());
  auto advance_cached = [&](std::span<const Sample> set, std::vector<Image>& state) {
    Batch b;
    b.inputs.resize(set.size());
    b.targets.resize(set.size());
    parallel_for(set.size(), config.threads, [&](std::size_t k) {
      b.inputs[k] = sirt_run(state[k], set[k].sinogram, geom, N, weights);
      b.targets[k] = residual_target(set[k].truth, b.inputs[k]);
    });
    return b;
  };

  MsdNetwork net(config.network.depth, config.network.dilation_modulus);
  init_uniform(net, config.network.init_low, config.network.init_high,
               derive_seed(config.seed, "network-init"));

  for (std::size_t stage = 0; stage < config.stages; ++stage) {
    const Batch train = config.cache_stage_inputs
                            ? advance_cached(train_set, train_state)
                            : stage_training_pairs(train_set, geom, ckpt.networks, stage, N,
                                                   config.threads);
    const Batch val = config.cache_stage_inputs
                          ? advance_cached(validation_set, val_state)
                          : stage_training_pairs(validation_set, geom, ckpt.networks, stage, N,
                                                 config.threads);

    AdamState adam(net.architecture().parameter_count(), config.adam);
    StageLosses losses;
    losses.initial_validation = evaluate_loss(net, val, config.threads);
    const std::uint64_t stage_seed = derive_seed(derive_seed(config.seed, "epoch-order"), stage);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      const double train_loss = train_epoch(net, train, config.batch_size, adam,
                                            derive_seed(stage_seed, epoch), config.threads);
      const double val_loss = evaluate_loss(net, val, config.threads);
      if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
        std::ostringstream msg;
        msg << "training diverged at stage " << stage + 1 << ", epoch " << epoch + 1
            << " (train loss " << train_loss << ", validation loss " << val_loss << ")";
        throw TrainingDiverged(stage + 1, epoch + 1, msg.str());
      }
      losses.train.push_back(train_loss);
      losses.validation.push_back(val_loss);
      if (observer) observer(stage, epoch, train_loss, val_loss);
    }

    ckpt.networks.push_back(net);
    ckpt.losses.push_back(std::move(losses));

    if (config.cache_stage_inputs) {
      parallel_for(train_set.size(), config.threads, [&](std::size_t k) {
        train_state[k] = apply_regularization(train.inputs[k], net);
      });
      parallel_for(validation_set.size(), config.threads, [&](std::size_t k) {
        val_state[k] = apply_regularization(val.inputs[k], net);
      });
    }
    // The next stage continues from this network's parameters.
  }
  return ckpt;
}

Reconstruction reconstruct(const Sinogram& p, const ProjectionGeometry& geom,
                           std::span<const MsdNetwork> networks, std::size_t sirt_iterations,
                           bool final_sirt, std::shared_ptr<const SirtWeights> weights) {
  geom.require_sinogram(p);
  if (!weights) weights = SirtWeights::compute(geom);
  Reconstruction r;
  Image x = geom.make_image();
  for (std::size_t s = 0; s < networks.size(); ++s) {
    x = sirt_run(x, p, geom, sirt_iterations, weights);
    r.intermediates.push_back({BlockKind::sirt, s, x});
    x = apply_regularization(x, networks[s]);
    r.intermediates.push_back({BlockKind::dnn, s, x});
  }
  if (final_sirt || networks.empty()) {
    x = sirt_run(x, p, geom, sirt_iterations, weights);
    if (final_sirt) r.intermediates.push_back({BlockKind::sirt, networks.size(), x});
  }
  r.image = std::move(x);
  return r;
}

Reconstruction reconstruct(const Sinogram& p, const ProjectionGeometry& geom,
                           const PipelineCheckpoint& checkpoint) {
  if (!(checkpoint.geometry == geom)) {
    throw InvalidInput("reconstruct: checkpoint was trained for a different geometry");
  }
  return reconstruct(p, geom, checkpoint.networks, checkpoint.config.sirt_iterations,
                     checkpoint.config.final_sirt);
}

// -------------------------------------------------------------- persistence

namespace {

constexpr char kModelMagic[8] = {'S', 'I', 'R', 'T', 'M', 'S', 'D', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((v >> (8 * b)) & 0xFF);
  out.write(bytes, 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
  return v;
}

std::string model_file_name(std::size_t stage_one_based) {
  std::ostringstream os;
  os << "model_" << std::setw(2) << std::setfill('0') << stage_one_based << ".msd";
  return os.str();
}

nlohmann::json read_header(std::istream& in, const fs::path& path) {
  char magic[8];
  in.read(magic, 8);
  if (!in || !std::equal(std::begin(magic), std::end(magic), std::begin(kModelMagic))) {
    throw IoError("'" + path.string() + "' is not a sirtnet model file");
  }
  const std::uint64_t length = get_u64(in);
  if (!in || length > (1u << 24)) throw IoError("'" + path.string() + "' has a corrupt header");
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) throw IoError("'" + path.string() + "' header is truncated");
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("'" + path.string() + "' header is not valid JSON: " + e.what());
  }
}

}  // namespace

void write_model(const fs::path& path, const MsdNetwork& net, const nlohmann::json& metadata) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  nlohmann::json header = metadata;
  header["format"] = "sirtnet-msd";
  header["depth"] = net.architecture().depth;
  header["dilation_modulus"] = net.architecture().dilation_modulus;
  header["parameter_count"] = net.architecture().parameter_count();
  header["layout"] = "hidden[0..depth) weights(channel,ky,kx)+bias, output weights(channel)+bias";
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(kModelMagic, 8);
  put_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (float v : net.parameters()) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    char bytes[4];
    for (int b = 0; b < 4; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    out.write(bytes, 4);
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

nlohmann::json read_model_header(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_header(in, path);
}

MsdNetwork read_model(const fs::path& path, nlohmann::json* header_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  const auto header = read_header(in, path);
  MsdArchitecture arch;
  try {
    arch.depth = header.at("depth").get<std::size_t>();
    arch.dilation_modulus = header.at("dilation_modulus").get<std::size_t>();
    if (header.at("parameter_count").get<std::size_t>() != arch.parameter_count()) {
      throw IoError("'" + path.string() + "' parameter count disagrees with its architecture");
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("'" + path.string() + "' header: " + e.what());
  }
  MsdNetwork net(arch);
  std::vector<unsigned char> raw(arch.parameter_count() * 4);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw IoError("'" + path.string() + "' parameter block is truncated");
  }
  std::vector<float> params(arch.parameter_count());
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(raw[i * 4 + b]) << (8 * b);
    params[i] = std::bit_cast<float>(bits);
  }
  net.set_parameters(params);
  if (header_out) *header_out = header;
  return net;
}

std::string format_losses_csv(const PipelineCheckpoint& ckpt) {
  std::ostringstream os;
  os << "stage,epoch,train_loss,val_loss\n" << std::setprecision(17);
  for (std::size_t s = 0; s < ckpt.losses.size(); ++s) {
    const auto& l = ckpt.losses[s];
    for (std::size_t e = 0; e < l.train.size(); ++e) {
      os << s + 1 << ',' << e + 1 << ',' << l.train[e] << ',' << l.validation[e] << '\n';
    }
  }
  return os.str();
}

void save_checkpoint(const fs::path& dir, const PipelineCheckpoint& ckpt) {
  fs::create_directories(dir);
  nlohmann::json config;
  config["pipeline"] = pipeline_config_to_json(ckpt.config);
  config["geometry"] = ckpt.geometry;
  std::vector<double> initial;
  for (const auto& l : ckpt.losses) initial.push_back(l.initial_validation);
  config["initial_validation_losses"] = initial;
  write_text(dir / "config.json", config.dump(2) + "\n");

  for (std::size_t s = 0; s < ckpt.networks.size(); ++s) {
    nlohmann::json meta;
    meta["stage"] = s + 1;
    meta["seed"] = ckpt.config.seed;
    meta["adam"] = adam_to_json(ckpt.config.adam);
    meta["training"] = {{"epochs", ckpt.config.epochs},
                        {"batch_size", ckpt.config.batch_size},
                        {"sirt_iterations", ckpt.config.sirt_iterations},
                        {"initialized_from", s == 0 ? "uniform" : model_file_name(s)}};
    if (s < ckpt.losses.size() && !ckpt.losses[s].train.empty()) {
      meta["training"]["final_train_loss"] = ckpt.losses[s].train.back();
      meta["training"]["final_val_loss"] = ckpt.losses[s].validation.back();
    }
    write_model(dir / model_file_name(s + 1), ckpt.networks[s], meta);
  }
  write_text(dir / "losses.csv", format_losses_csv(ckpt));
}

PipelineCheckpoint load_checkpoint(const fs::path& dir) {
  nlohmann::json config;
  try {
    config = nlohmann::json::parse(read_text(dir / "config.json"));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("malformed '" + (dir / "config.json").string() + "': " + e.what());
  }
  PipelineCheckpoint ckpt;
  try {
    ckpt.config = pipeline_config_from_json(config.at("pipeline"));
    ckpt.geometry = geometry_from_json(config.at("geometry"));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("checkpoint config: " + std::string(e.what()));
  }
  const auto initial =
      config.value("initial_validation_losses", std::vector<double>(ckpt.config.stages, 0.0));

  for (std::size_t s = 0; s < ckpt.config.stages; ++s) {
    MsdNetwork net = read_model(dir / model_file_name(s + 1));
    if (net.architecture().depth != ckpt.config.network.depth ||
        net.architecture().dilation_modulus != ckpt.config.network.dilation_modulus) {
      throw IoError(model_file_name(s + 1) + " does not match the checkpoint's network config");
    }
    ckpt.networks.push_back(std::move(net));
  }

  ckpt.losses.assign(ckpt.config.stages, StageLosses{});
  for (std::size_t s = 0; s < ckpt.config.stages && s < initial.size(); ++s) {
    ckpt.losses[s].initial_validation = initial[s];
  }
  std::istringstream csv(read_text(dir / "losses.csv"));
  std::string line;
  std::getline(csv, line);
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string stage, epoch, train, val;
    std::getline(fields, stage, ',');
    std::getline(fields, epoch, ',');
    std::getline(fields, train, ',');
    std::getline(fields, val, ',');
    const auto s = std::stoul(stage);
    if (s == 0 || s > ckpt.config.stages) throw IoError("losses.csv: stage out of range");
    ckpt.losses[s - 1].train.push_back(std::stod(train));
    ckpt.losses[s - 1].validation.push_back(std::stod(val));
  }
  return ckpt;
}

}  // namespace sirtnet
