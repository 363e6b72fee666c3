#include "cli/commands.hpp"

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "cli/run_config.hpp"
#include "sirtnet/dataio.hpp"
#include "sirtnet/error.hpp"
#include "sirtnet/metrics.hpp"
#include "sirtnet/parallel.hpp"
#include "sirtnet/pipeline.hpp"
#include "sirtnet/random.hpp"
#include "sirtnet/solvers.hpp"

namespace fs = std::filesystem;

namespace sirtnet::cli {

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  std::string data_dir;
  std::string checkpoint_dir;
  std::string report_dir;
};

RunConfig resolve_config(const Options& o) {
  RunConfig c = o.config_path.empty() ? default_run_config() : load_run_config(o.config_path);
  if (o.seed) {
    c.seed = *o.seed;
    c.pipeline.seed = c.seed_for("pipeline");
  }
  if (!o.data_dir.empty()) c.paths.data_dir = o.data_dir;
  if (!o.checkpoint_dir.empty()) c.paths.checkpoint_dir = o.checkpoint_dir;
  if (!o.report_dir.empty()) c.paths.report_dir = o.report_dir;
  c.pipeline.threads = std::max<std::size_t>(o.threads, 1);
  return c;
}

void copy_config(const RunConfig& c, const fs::path& dir) {
  write_text(dir / "run_config.json", run_config_to_json(c).dump(2) + "\n");
}

fs::path manifest_path(const RunConfig& c) { return c.paths.data_dir / "manifest.json"; }

// ---------------------------------------------------------------- phantoms

int cmd_phantoms(const RunConfig& c, std::ostream& out) {
  const std::size_t n = c.geometry.image_size();
  const auto train = generate_phantoms(c.phantoms.spec, c.phantoms.count, n, c.seed_for("phantoms"));
  std::vector<Image> test;
  if (c.phantoms.test_count > 0) {
    test = generate_phantoms(c.phantoms.spec, c.phantoms.test_count, n, c.seed_for("test-phantoms"));
  }
  std::optional<NoiseModel> noise;
  if (c.noise.enabled) noise = NoiseModel{c.noise.incident_intensity, 1.0, c.seed_for("noise")};
  const auto m = build_dataset(train, test, c.geometry, noise, c.seed_for("split"),
                               c.phantoms.train_ratio, c.paths.data_dir);
  copy_config(c, c.paths.data_dir);
  for (const auto& w : c.geometry.warnings()) out << "warning: " << w << "\n";
  out << "wrote " << m.train.size() << " train, " << m.validation.size() << " validation, "
      << m.test.size() << " test samples to " << c.paths.data_dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string input;
  std::string output;
  std::optional<double> intensity;
  std::optional<double> attenuation_scale;
};

int cmd_simulate(const RunConfig& c, const SimulateArgs& a, std::ostream& out) {
  const Image image = read_image(a.input);
  Sinogram sino = simulate_low_dose(image, c.geometry);
  if (a.intensity) {
    if (!(*a.intensity > 0.0)) throw ConfigError("--i0 must be > 0");
    NoiseModel model;
    model.incident_intensity = *a.intensity;
    model.attenuation_scale =
        a.attenuation_scale ? *a.attenuation_scale : attenuation_scale_for(std::span(&sino, 1));
    model.seed = c.seed_for("simulate");
    std::size_t clamped = 0;
    sino = apply_poisson_noise(sino, model, &clamped);
    if (clamped) out << "warning: " << clamped << " negative line integrals clamped to 0\n";
  }
  write_sinogram(a.output, sino);
  write_text(a.output + ".run.json", run_config_to_json(c).dump(2) + "\n");
  out << "wrote " << a.output << " (" << sino.n_angles() << " x " << sino.n_detectors() << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------- train

bool same_training_setup(const PipelineCheckpoint& existing, const RunConfig& c,
                         const ProjectionGeometry& geom) {
  return pipeline_config_to_json(existing.config) == pipeline_config_to_json(c.pipeline) &&
         existing.geometry == geom;
}

int cmd_train(const RunConfig& c, bool force, bool quiet, std::ostream& out) {
  const auto manifest = load_manifest(manifest_path(c));
  if (!(manifest.geometry == c.geometry)) {
    throw ConfigError("dataset geometry in " + manifest_path(c).string() +
                      " differs from the config geometry");
  }
  const fs::path dir = c.paths.checkpoint_dir;
  if (!force && fs::exists(dir / "config.json")) {
    const auto existing = load_checkpoint(dir);
    if (!same_training_setup(existing, c, manifest.geometry)) {
      throw ConfigError("checkpoint at " + dir.string() +
                        " was trained with a different configuration (use --force to overwrite)");
    }
    out << "checkpoint at " << dir.string() << " already matches this configuration\n";
    return kExitOk;
  }

  const auto train = load_samples(manifest, Split::train);
  const auto val = load_samples(manifest, Split::validation);
  if (train.empty() || val.empty()) {
    throw ConfigError("training needs nonempty train and validation splits (raise phantoms.count)");
  }
  out << "training " << c.pipeline.stages << " networks on " << train.size() << " samples ("
      << val.size() << " validation)\n";
  const auto ckpt = train_pipeline(
      train, val, manifest.geometry, c.pipeline,
      [&](std::size_t stage, std::size_t epoch, double tl, double vl) {
        if (quiet) return;
        out << "stage " << stage + 1 << " epoch " << epoch + 1 << " train " << tl << " val " << vl
            << "\n"
            << std::flush;
      });
  save_checkpoint(dir, ckpt);
  copy_config(c, dir);
  out << "saved checkpoint to " << dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- reconstruct

struct MethodSettings {
  std::size_t sirt_iterations;
  std::size_t cgls_iterations;
  const PipelineCheckpoint* checkpoint;
};

Reconstruction run_method(const std::string& method, const Sinogram& p,
                          const ProjectionGeometry& geom, const MethodSettings& s) {
  if (method == "fbp") return {fbp(p, geom), {}};
  if (method == "sirt") return {sirt_run(geom.make_image(), p, geom, s.sirt_iterations), {}};
  if (method == "cgls") return {cgls(p, geom, s.cgls_iterations), {}};
  if (method == "pipeline") {
    if (!s.checkpoint) throw ConfigError("method 'pipeline' needs a checkpoint");
    return reconstruct(p, geom, *s.checkpoint);
  }
  throw ConfigError("unknown method '" + method + "'");
}

std::string block_label(const Intermediate& im, std::size_t stages) {
  if (im.kind == BlockKind::sirt && im.stage == stages) return "sirt_final";
  return std::string(im.kind == BlockKind::sirt ? "sirt_" : "dnn_") + std::to_string(im.stage + 1);
}

std::optional<PipelineCheckpoint> maybe_checkpoint(const RunConfig& c,
                                                   const std::vector<std::string>& methods) {
  if (std::find(methods.begin(), methods.end(), "pipeline") == methods.end()) return std::nullopt;
  if (!fs::exists(c.paths.checkpoint_dir / "config.json")) {
    throw ConfigError("no checkpoint at " + c.paths.checkpoint_dir.string() +
                      " (run 'train' first)");
  }
  return load_checkpoint(c.paths.checkpoint_dir);
}

struct ReconstructArgs {
  std::string method;
  std::string input;
  std::string output;
  std::optional<std::size_t> iterations;
  std::string intermediates;
  bool pgm = false;
};

int cmd_reconstruct(const RunConfig& c, const ReconstructArgs& a, std::ostream& out) {
  const Sinogram p = read_sinogram(a.input);
  MethodSettings s{c.solvers.sirt_iterations, c.solvers.cgls_iterations, nullptr};
  if (a.iterations) {
    if (a.method == "cgls" && *a.iterations == 0) throw ConfigError("cgls needs --iterations >= 1");
    s.sirt_iterations = s.cgls_iterations = *a.iterations;
  }
  const auto ckpt = maybe_checkpoint(c, {a.method});
  if (ckpt) s.checkpoint = &*ckpt;
  const ProjectionGeometry& geom = ckpt ? ckpt->geometry : c.geometry;
  geom.require_sinogram(p);

  const auto r = run_method(a.method, p, geom, s);
  write_image(a.output, r.image);
  if (a.pgm) write_pgm16(a.output + ".pgm", r.image);
  if (!a.intermediates.empty()) {
    const fs::path dir = a.intermediates;
    fs::create_directories(dir);
    for (std::size_t k = 0; k < r.intermediates.size(); ++k) {
      std::ostringstream name;
      name << std::setw(2) << std::setfill('0') << k + 1 << "_"
           << block_label(r.intermediates[k], ckpt ? ckpt->networks.size() : 0) << ".f32";
      write_image(dir / name.str(), r.intermediates[k].image);
    }
  }
  write_text(a.output + ".run.json", run_config_to_json(c).dump(2) + "\n");
  out << "wrote " << a.output << " (" << a.method << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

struct Evaluation {
  std::vector<MetricEntry> image;
  std::vector<MetricEntry> sinogram;
  std::vector<MetricEntry> blocks;  // method = block label, pipeline only
};

Evaluation evaluate_samples(const std::vector<Sample>& samples,
                            const std::vector<Sinogram>& measured, const ProjectionGeometry& geom,
                            const std::vector<std::string>& methods, const MethodSettings& s,
                            std::size_t threads) {
  const std::size_t n = samples.size();
  std::vector<Evaluation> per(n);
  parallel_for(n, threads, [&](std::size_t k) {
    auto& e = per[k];
    for (const auto& method : methods) {
      const auto r = run_method(method, measured[k], geom, s);
      e.image.push_back(image_metrics(method, samples[k].id, r.image, samples[k].truth));
      e.sinogram.push_back(sinogram_fidelity(method, samples[k].id, r.image, measured[k], geom));
      for (const auto& im : r.intermediates) {
        e.blocks.push_back(image_metrics(block_label(im, s.checkpoint->networks.size()),
                                         samples[k].id, im.image, samples[k].truth));
      }
    }
  });
  // Method-major order, samples in manifest order within each method.
  Evaluation all;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    for (const auto& e : per) {
      all.image.push_back(e.image[m]);
      all.sinogram.push_back(e.sinogram[m]);
    }
  }
  if (!per.empty()) {
    for (std::size_t b = 0; b < per.front().blocks.size(); ++b) {
      for (const auto& e : per) all.blocks.push_back(e.blocks[b]);
    }
  }
  return all;
}

MethodSettings settings_for(const RunConfig& c, const std::optional<PipelineCheckpoint>& ckpt) {
  return {c.solvers.sirt_iterations, c.solvers.cgls_iterations, ckpt ? &*ckpt : nullptr};
}

std::vector<Sample> test_samples(const DatasetManifest& m) {
  auto samples = load_samples(m, Split::test);
  if (samples.empty()) throw ConfigError("the dataset's test list is empty");
  return samples;
}

std::string intensity_label(double i0) {
  std::ostringstream os;
  os << std::setprecision(0) << std::scientific << i0;
  return os.str();
}

int run_sweep(const RunConfig& c, const DatasetManifest& m, const std::vector<Sample>& samples,
              const std::optional<PipelineCheckpoint>& ckpt, const fs::path& dir,
              std::ostream& out) {
  if (c.evaluation.sweep_intensities.empty()) {
    throw ConfigError("evaluation.sweep_intensities is empty");
  }
  const auto s = settings_for(c, ckpt);
  std::vector<MetricSummary> rows;
  std::ostringstream table;
  for (std::size_t level = 0; level < c.evaluation.sweep_intensities.size(); ++level) {
    const double i0 = c.evaluation.sweep_intensities[level];
    std::vector<Sinogram> noisy;
    for (std::size_t k = 0; k < samples.size(); ++k) {
      NoiseModel model{i0, m.attenuation_scale,
                       derive_seed(derive_seed(c.seed_for("sweep"), level), k)};
      noisy.push_back(apply_poisson_noise(samples[k].sinogram, model));
    }
    const auto e = evaluate_samples(samples, noisy, m.geometry, c.evaluation.methods, s,
                                    c.pipeline.threads);
    const std::string label = intensity_label(i0);
    write_text(dir / ("sweep_" + label + ".csv"), format_csv(e.image));
    const auto summary = aggregate_report(e.image);
    table << "I0 = " << label << "\n" << format_table(summary) << "\n";
    for (auto row : summary) {
      row.method += "@" + label;
      rows.push_back(row);
    }
  }
  write_text(dir / "sweep_summary.csv", format_summary_csv(rows));
  write_text(dir / "sweep.txt", table.str());
  out << table.str();
  return kExitOk;
}

int cmd_evaluate(const RunConfig& c, bool sweep, std::ostream& out) {
  const auto m = load_manifest(manifest_path(c));
  const auto samples = test_samples(m);
  const auto ckpt = maybe_checkpoint(c, c.evaluation.methods);
  if (ckpt && !(ckpt->geometry == m.geometry)) {
    throw ConfigError("checkpoint geometry differs from the dataset geometry");
  }
  const fs::path dir = c.paths.report_dir;
  fs::create_directories(dir);
  copy_config(c, dir);

  std::vector<Sinogram> measured;
  for (const auto& s : samples) measured.push_back(s.sinogram);
  const auto e = evaluate_samples(samples, measured, m.geometry, c.evaluation.methods,
                                  settings_for(c, ckpt), c.pipeline.threads);
  write_text(dir / "image_metrics.csv", format_csv(e.image));
  write_text(dir / "sinogram_metrics.csv", format_csv(e.sinogram));
  auto summary = aggregate_report(e.image);
  const auto sino_summary = aggregate_report(e.sinogram);
  summary.insert(summary.end(), sino_summary.begin(), sino_summary.end());
  write_text(dir / "summary.csv", format_summary_csv(summary));
  std::ostringstream report;
  report << "image space\n"
         << format_table(aggregate_report(e.image)) << "\nsinogram space\n"
         << format_table(sino_summary);
  if (!e.blocks.empty()) {
    write_text(dir / "intermediates.csv", format_csv(e.blocks));
    report << "\npipeline blocks (image space)\n" << format_table(aggregate_report(e.blocks));
  }
  write_text(dir / "report.txt", report.str());
  out << report.str();
  if (sweep && !c.evaluation.sweep_intensities.empty()) {
    out << "\nnoise sweep\n";
    run_sweep(c, m, samples, ckpt, dir, out);
  }
  return kExitOk;
}

int cmd_sweep(const RunConfig& c, std::ostream& out) {
  const auto m = load_manifest(manifest_path(c));
  const auto samples = test_samples(m);
  const auto ckpt = maybe_checkpoint(c, c.evaluation.methods);
  const fs::path dir = c.paths.report_dir;
  fs::create_directories(dir);
  copy_config(c, dir);
  return run_sweep(c, m, samples, ckpt, dir, out);
}

// ---------------------------------------------------------------- inspect

int cmd_inspect(const fs::path& dir, std::ostream& out) {
  const auto ckpt = load_checkpoint(dir);
  out << "checkpoint " << dir.string() << "\n";
  out << "geometry " << nlohmann::json(ckpt.geometry).dump() << "\n";
  out << "pipeline " << pipeline_config_to_json(ckpt.config).dump() << "\n";
  out << "parameters per network "
      << (ckpt.networks.empty() ? 0 : ckpt.networks.front().architecture().parameter_count())
      << "\n";
  out << "stage  initial_val  final_train  final_val\n";
  for (std::size_t s = 0; s < ckpt.losses.size(); ++s) {
    const auto& l = ckpt.losses[s];
    out << std::setw(5) << s + 1 << "  " << std::setw(11) << l.initial_validation << "  "
        << std::setw(11) << (l.train.empty() ? NAN : l.train.back()) << "  " << std::setw(9)
        << (l.validation.empty() ? NAN : l.validation.back()) << "\n";
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"sparse-view CT reconstruction with SIRT and learned regularization", "sirtnet"};
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  app.add_option("-c,--config", o.config_path, "JSON run configuration")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "override the root seed");
  app.add_option("--threads", o.threads, "worker threads for per-sample work")
      ->check(CLI::PositiveNumber);
  app.add_option("--data", o.data_dir, "dataset directory (default $SIRTNET_DATA_DIR/dataset)");
  app.add_option("--checkpoint", o.checkpoint_dir, "pipeline checkpoint directory");
  app.add_option("--report", o.report_dir, "evaluation output directory");

  auto* phantoms = app.add_subcommand("phantoms", "generate a phantom dataset and manifest");
  std::optional<std::size_t> count, test_count;
  phantoms->add_option("--count", count, "training + validation phantoms");
  phantoms->add_option("--test-count", test_count, "held-out test phantoms");

  auto* simulate = app.add_subcommand("simulate", "forward-project one image, optionally noisy");
  SimulateArgs sim;
  simulate->add_option("-i,--input", sim.input, "image file (.f32)")->required();
  simulate->add_option("-o,--output", sim.output, "sinogram file (.f32)")->required();
  simulate->add_option("--i0", sim.intensity, "incident photon count; enables Poisson noise");
  simulate->add_option("--attenuation-scale", sim.attenuation_scale,
                       "attenuation scale (default: max line integral maps to 4)");

  auto* train = app.add_subcommand("train", "train the SIRT+DNN pipeline");
  bool force = false, quiet = false;
  train->add_flag("--force", force, "overwrite an existing checkpoint");
  train->add_flag("-q,--quiet", quiet, "no per-epoch output");

  auto* recon = app.add_subcommand("reconstruct", "reconstruct one sinogram");
  ReconstructArgs ra;
  recon->add_option("-m,--method", ra.method, "fbp, sirt, cgls or pipeline")
      ->required()
      ->check(CLI::IsMember({"fbp", "sirt", "cgls", "pipeline"}));
  recon->add_option("-i,--input", ra.input, "sinogram file (.f32)")->required();
  recon->add_option("-o,--output", ra.output, "image file (.f32)")->required();
  recon->add_option("--iterations", ra.iterations, "SIRT or CGLS iteration count");
  recon->add_option("--intermediates", ra.intermediates,
                    "directory for per-block pipeline images");
  recon->add_flag("--pgm", ra.pgm, "also write a 16-bit PGM preview");

  auto* evaluate = app.add_subcommand("evaluate", "metrics for every method over the test list");
  bool no_sweep = false;
  evaluate->add_flag("--no-sweep", no_sweep, "skip the noise sweep");

  auto* sweep = app.add_subcommand("sweep-noise", "metrics over the configured I0 levels");

  auto* inspect = app.add_subcommand("inspect-checkpoint", "summarize a pipeline checkpoint");
  std::string inspect_dir;
  inspect->add_option("dir", inspect_dir, "checkpoint directory (default from config)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const RunConfig c = resolve_config(o);
    if (*phantoms) {
      RunConfig pc = c;
      if (count) pc.phantoms.count = *count;
      if (test_count) pc.phantoms.test_count = *test_count;
      if (pc.phantoms.count < 1) throw ConfigError("--count must be >= 1");
      return cmd_phantoms(pc, out);
    }
    if (*simulate) return cmd_simulate(c, sim, out);
    if (*train) return cmd_train(c, force, quiet, out);
    if (*recon) return cmd_reconstruct(c, ra, out);
    if (*evaluate) return cmd_evaluate(c, !no_sweep, out);
    if (*sweep) return cmd_sweep(c, out);
    if (*inspect) {
      return cmd_inspect(inspect_dir.empty() ? c.paths.checkpoint_dir : fs::path(inspect_dir),
                         out);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace sirtnet::cli
