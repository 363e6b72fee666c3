// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "sirtnet/dataio.hpp"
#include "sirtnet/geometry.hpp"
#include "sirtnet/metrics.hpp"
#include "sirtnet/network.hpp"
#include "sirtnet/parallel.hpp"
#include "sirtnet/pipeline.hpp"
#include "sirtnet/random.hpp"
#include "sirtnet/solvers.hpp"

using namespace sirtnet;

namespace {

// Tolerances and budgets.
constexpr double kAdjointTol = 1e-5;
constexpr double kDenseOracleTol = 1e-4;
constexpr double kSirtMonotoneSlack = 1e-6;
constexpr double kSirtFinalRelResidual = 1e-3;
constexpr double kSirtLinearityTol = 1e-4;
constexpr double kGradientRelTol = 1e-4;
constexpr double kOverfitFactor = 10.0;
constexpr double kPipelineGainDb = 2.0;
constexpr double kOrderingGapDb = 1.0;
constexpr double kFidelityGapDb = 10.0;  // "much greater than" for sinogram PSNR
constexpr double kSweepNoiseSigmas = 2.0;
constexpr double kSsimIdentityTol = 1e-12;

constexpr double kBudget1 = 10.0, kBudget2 = 30.0, kBudget3 = 60.0, kBudget4 = 120.0,
                 kBudget5 = 7200.0;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0,
                                  double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

Image random_image(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto v = random_vector(n * n, rng, 0.0, 1.0);
  return Image(n, std::vector<float>(v.begin(), v.end()));
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

std::string sci(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << v;
  return os.str();
}

// ------------------------------------------------------------------ 1

void operator_correctness(Outcome& o) {
  const auto g = ProjectionGeometry::parallel(16, 10);
  std::mt19937_64 rng(1);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = random_vector(g.pixel_count(), rng);
    const auto y = random_vector(g.ray_count(), rng);
    std::vector<double> wx(g.ray_count()), wty(g.pixel_count());
    forward_project(x, wx, g);
    back_project(y, wty, g);
    const double gap = std::abs(dot(wx, y) - dot(x, wty));
    worst = std::max(worst, gap / (std::sqrt(dot(x, x)) * std::sqrt(dot(y, y))));
  }
  o.require(worst <= kAdjointTol, "adjoint identity");

  const auto small = ProjectionGeometry::parallel(8, 10);
  const auto dense = oracle::projection_matrix(small);
  double row_gap = 0.0;
  for (std::size_t j = 0; j < small.pixel_count(); ++j) {
    std::vector<double> e(small.pixel_count(), 0.0), col(small.ray_count());
    e[j] = 1.0;
    forward_project(e, col, small);
    for (std::size_t i = 0; i < small.ray_count(); ++i) {
      row_gap = std::max(row_gap, std::abs(col[i] - dense(i, j)));
    }
  }
  o.require(row_gap <= kDenseOracleTol, "dense oracle");
  o.detail << "adjoint max rel gap " << sci(worst) << ", dense-oracle max entry gap " << sci(row_gap);
}

// ------------------------------------------------------------------ 2

void sirt_behavior(Outcome& o) {
  const std::size_t n = 32;
  const auto g = ProjectionGeometry::parallel(n, 32, 46);
  const Sinogram p = forward_project(random_image(n, 2), g);
  SirtState s(g, p, g.make_image());
  const double initial = s.weighted_residual();
  double previous = initial;
  bool monotone = true;
  for (int k = 0; k < 200; ++k) {
    s.advance();
    const double now = s.weighted_residual();
    monotone = monotone && now <= previous * (1.0 + kSirtMonotoneSlack);
    previous = now;
  }
  const double rel = previous / initial;
  o.require(monotone, "monotone weighted residual");
  o.require(rel < kSirtFinalRelResidual, "final relative residual");

  const auto gl = ProjectionGeometry::parallel(n, 20);
  const Sinogram p1 = forward_project(random_image(n, 3), gl);
  const Sinogram p2 = forward_project(random_image(n, 4), gl);
  Sinogram mix = gl.make_sinogram();
  for (std::size_t i = 0; i < mix.ray_count(); ++i) {
    mix.values()[i] = 0.6f * p1.values()[i] - 1.4f * p2.values()[i];
  }
  const Image a = sirt_run(gl.make_image(), p1, gl, 50);
  const Image b = sirt_run(gl.make_image(), p2, gl, 50);
  const Image m = sirt_run(gl.make_image(), mix, gl, 50);
  double diff = 0.0, norm = 0.0;
  for (std::size_t j = 0; j < m.pixel_count(); ++j) {
    const double c = 0.6 * a.values()[j] - 1.4 * b.values()[j];
    diff += std::pow(m.values()[j] - c, 2);
    norm += c * c;
  }
  const double lin = std::sqrt(diff / norm);
  o.require(lin <= kSirtLinearityTol, "linearity");
  o.detail << "monotone over 200 steps, final/initial residual " << sci(rel)
           << ", linearity rel gap " << sci(lin);
}

// ------------------------------------------------------------------ 3

double loss_of(const MsdArchitecture& arch, std::span<const double> params,
               std::span<const double> input, std::span<const double> target, std::size_t n) {
  const auto tape = msd_forward(arch, params, input, n);
  double s = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) s += std::pow(tape.output[i] - target[i], 2);
  return s / static_cast<double>(target.size());
}

void gradient_suite(Outcome& o) {
  const MsdArchitecture arch{3, 10};
  const std::size_t n = 8;
  std::mt19937_64 rng(5);
  const auto params = random_vector(arch.parameter_count(), rng, -0.25, 0.25);
  const auto input = random_vector(n * n, rng, 0.0, 1.0);
  const auto target = random_vector(n * n, rng, -0.5, 0.5);

  const auto tape = msd_forward(arch, params, input, n);
  std::vector<double> dloss(n * n);
  for (std::size_t i = 0; i < dloss.size(); ++i) {
    dloss[i] = 2.0 * (tape.output[i] - target[i]) / static_cast<double>(n * n);
  }
  std::vector<double> grads(arch.parameter_count(), 0.0);
  msd_backward(arch, params, tape, dloss, grads);

  const double h = 1e-3;
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto plus = params, minus = params;
    plus[k] += h;
    minus[k] -= h;
    const double fd =
        (loss_of(arch, plus, input, target, n) - loss_of(arch, minus, input, target, n)) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - grads[k]) /
                                std::max({std::abs(fd), std::abs(grads[k]), 1e-8}));
  }
  o.require(worst < kGradientRelTol, "finite differences");
  o.detail << params.size() << " parameters (dilations 1-3, output layer, biases), worst rel error "
           << sci(worst);
}

// ------------------------------------------------------------------ 4

void training_smoke(Outcome& o) {
  // One phantom mapped to a pointwise affine target a depth-3 network can represent.
  const std::size_t n = 16;
  const Image x = generate_phantoms({}, 1, n, 6)[0];
  Image target(n);
  for (std::size_t i = 0; i < target.pixel_count(); ++i) target.values()[i] = 0.5f * x.values()[i] - 0.25f;
  Batch data;
  data.inputs.push_back(x);
  data.targets.push_back(target);

  auto run = [&](std::size_t threads) {
    MsdNetwork net(3, 10);
    init_uniform(net, -0.25, 0.25, 7);
    AdamState adam(net.architecture().parameter_count(), AdamConfig{1e-2, 0.9, 0.999, 1e-8});
    std::vector<double> losses;
    for (std::uint64_t e = 0; e < 50; ++e) losses.push_back(train_epoch(net, data, 1, adam, e, threads));
    return std::make_pair(losses, net);
  };
  const auto a = run(1);
  const auto b = run(1);
  const auto c = run(2);
  const auto& l = a.first;
  const double factor = l.front() / l.back();
  std::size_t rises = 0;
  for (std::size_t e = 1; e < l.size(); ++e) rises += l[e] >= l[e - 1];
  o.require(factor >= kOverfitFactor, "overfit factor");
  o.require(rises == 0, "strictly decreasing loss");
  o.require(a.first == b.first && a.second == b.second, "bitwise reproducibility");
  o.require(a.first == c.first && a.second == c.second, "thread-count independence");
  o.detail << "depth-3 loss " << sci(l.front()) << " (epoch 1) -> " << sci(l.back()) << " (epoch 50), x"
           << fmt(factor, 1) << ", " << rises << " non-decreasing steps; trajectories bitwise identical";
}

// ------------------------------------------------------------------ 5-8 desk run

struct DeskRun {
  ProjectionGeometry geom = ProjectionGeometry::parallel(64, 20);
  std::vector<Sample> train, validation, test;
  double attenuation_scale = 1.0;
  PipelineCheckpoint checkpoint;
  double train_seconds = 0.0;
  std::size_t threads = 1;
};

DeskRun build_desk_run() {
  DeskRun d;
  d.threads = std::max(1u, std::thread::hardware_concurrency());
  const std::uint64_t root = 2024;
  const auto images = generate_phantoms({}, 200, 64, derive_seed(root, "phantoms"));
  const auto test_images = generate_phantoms({}, 50, 64, derive_seed(root, "test-phantoms"));
  auto make = [&](const Image& img, const std::string& id) {
    return Sample{id, img, simulate_low_dose(img, d.geom)};
  };
  const auto [tr, va] = split_indices(images.size(), 0.8, derive_seed(root, "split"));
  for (auto k : tr) d.train.push_back(make(images[k], "sample_" + std::to_string(k)));
  for (auto k : va) d.validation.push_back(make(images[k], "sample_" + std::to_string(k)));
  for (std::size_t k = 0; k < test_images.size(); ++k) {
    d.test.push_back(make(test_images[k], "test_" + std::to_string(k)));
  }
  std::vector<Sinogram> all;
  for (const auto* set : {&d.train, &d.validation, &d.test}) {
    for (const auto& s : *set) all.push_back(s.sinogram);
  }
  d.attenuation_scale = attenuation_scale_for(all);

  PipelineConfig c;
  c.sirt_iterations = 10;
  c.stages = 3;
  c.epochs = 30;
  c.batch_size = 10;
  c.network.depth = 15;
  c.adam.learning_rate = 1e-3;
  c.cache_stage_inputs = true;
  c.threads = d.threads;
  c.seed = derive_seed(root, "pipeline");
  const auto t0 = Clock::now();
  d.checkpoint = train_pipeline(d.train, d.validation, d.geom, c,
                                [](std::size_t stage, std::size_t epoch, double tl, double vl) {
                                  if ((epoch + 1) % 10 == 0) {
                                    std::cerr << "  stage " << stage + 1 << " epoch " << epoch + 1
                                              << " train " << tl << " val " << vl << "\n";
                                  }
                                });
  d.train_seconds = seconds_since(t0);
  return d;
}

struct MethodResults {
  std::vector<double> psnr;       // image space, per test sample
  std::vector<double> sino_psnr;  // sinogram space
  std::vector<double> sino_mse;
};

// Methods evaluated on the test set: fbp, sirt-200, cgls-50, pipeline, and sirt with the
// pipeline's total iteration count.
enum Method { kFbp, kSirt, kCgls, kPipeline, kSirtMatched, kMethodCount };
const char* const kMethodNames[] = {"fbp", "sirt", "cgls", "pipeline", "sirt-matched"};
constexpr std::size_t kSirtIterations = 200;
constexpr std::size_t kCglsIterations = 50;

struct TestEvaluation {
  std::vector<MethodResults> methods = std::vector<MethodResults>(kMethodCount);
  std::vector<std::vector<double>> block_psnr;  // [block][sample]
  std::vector<double> last_dnn_sino_mse;        // pipeline output before the final SIRT block
};

TestEvaluation evaluate_test_set(const DeskRun& d, const std::vector<Sinogram>& measured,
                                 bool with_blocks) {
  const std::size_t count = d.test.size();
  const auto& ck = d.checkpoint;
  const std::size_t matched = (ck.networks.size() + (ck.config.final_sirt ? 1 : 0)) *
                              ck.config.sirt_iterations;
  const auto weights = SirtWeights::compute(d.geom);

  struct Per {
    Image recon[kMethodCount];
    std::vector<Image> blocks;
  };
  std::vector<Per> per(count);
  parallel_for(count, d.threads, [&](std::size_t k) {
    const Sinogram& p = measured[k];
    per[k].recon[kFbp] = fbp(p, d.geom);
    per[k].recon[kSirt] = sirt_run(d.geom.make_image(), p, d.geom, kSirtIterations, weights);
    per[k].recon[kCgls] = cgls(p, d.geom, kCglsIterations);
    auto r = reconstruct(p, d.geom, ck.networks, ck.config.sirt_iterations, ck.config.final_sirt,
                         weights);
    per[k].recon[kPipeline] = r.image;
    per[k].recon[kSirtMatched] = sirt_run(d.geom.make_image(), p, d.geom, matched, weights);
    for (auto& im : r.intermediates) per[k].blocks.push_back(std::move(im.image));
  });

  TestEvaluation e;
  if (with_blocks) e.block_psnr.assign(per.front().blocks.size(), {});
  for (std::size_t k = 0; k < count; ++k) {
    for (int m = 0; m < kMethodCount; ++m) {
      const auto img = image_metrics(kMethodNames[m], d.test[k].id, per[k].recon[m], d.test[k].truth);
      const auto sino = sinogram_fidelity(kMethodNames[m], d.test[k].id, per[k].recon[m],
                                          measured[k], d.geom);
      e.methods[m].psnr.push_back(img.psnr_db);
      e.methods[m].sino_psnr.push_back(sino.psnr_db);
      e.methods[m].sino_mse.push_back(sino.mse);
    }
    if (with_blocks) {
      for (std::size_t b = 0; b < per[k].blocks.size(); ++b) {
        e.block_psnr[b].push_back(psnr(per[k].blocks[b], d.test[k].truth));
      }
      // The block before the final SIRT is the last network's output.
      const Image& net_out = per[k].blocks[per[k].blocks.size() - (ck.config.final_sirt ? 2 : 1)];
      e.last_dnn_sino_mse.push_back(sinogram_fidelity("dnn", d.test[k].id, net_out, measured[k], d.geom).mse);
    }
  }
  return e;
}

void pipeline_trends(const DeskRun& d, const TestEvaluation& e, Outcome& o) {
  const auto& losses = d.checkpoint.losses;
  bool initial_decreasing = true, first_epoch_decreasing = true;
  o.detail << "train " << fmt(d.train_seconds, 0) << " s; val loss at epoch 1 per stage:";
  for (std::size_t s = 0; s < losses.size(); ++s) {
    o.detail << " " << sci(losses[s].validation.front());
    if (s > 0) {
      first_epoch_decreasing =
          first_epoch_decreasing && losses[s].validation.front() < losses[s - 1].validation.front();
      initial_decreasing =
          initial_decreasing && losses[s].initial_validation < losses[s - 1].initial_validation;
    }
  }
  o.detail << " (before training:";
  for (const auto& l : losses) o.detail << " " << sci(l.initial_validation);
  o.detail << ")";
  o.require(first_epoch_decreasing, "(a) stage-wise validation loss decreasing");

  bool blocks_ok = true;
  o.detail << "; block PSNR:";
  for (std::size_t b = 0; b < e.block_psnr.size(); ++b) {
    const double m = mean_of(e.block_psnr[b]);
    o.detail << " " << fmt(m, 2);
    // Odd blocks are network outputs following a SIRT block.
    if (b % 2 == 1) blocks_ok = blocks_ok && m >= mean_of(e.block_psnr[b - 1]);
  }
  o.require(blocks_ok, "(b) DNN block does not lower PSNR");

  const double pipe = mean_of(e.methods[kPipeline].psnr);
  const double sirt = mean_of(e.methods[kSirtMatched].psnr);
  o.detail << "; pipeline " << fmt(pipe, 2) << " dB vs SIRT-"
           << (d.checkpoint.networks.size() + 1) * d.checkpoint.config.sirt_iterations << " "
           << fmt(sirt, 2) << " dB (gain " << fmt(pipe - sirt, 2) << ")";
  o.require(pipe - sirt >= kPipelineGainDb, "(c) gain over matched SIRT");
  o.require(d.train_seconds < kBudget5, "runtime budget");
}

void image_ordering(const TestEvaluation& e, Outcome& o) {
  const double pipe = mean_of(e.methods[kPipeline].psnr);
  const double sirt = mean_of(e.methods[kSirt].psnr);
  const double fbp_db = mean_of(e.methods[kFbp].psnr);
  o.detail << "PSNR pipeline " << fmt(pipe, 2) << " > SIRT-" << kSirtIterations << " " << fmt(sirt, 2)
           << " > FBP " << fmt(fbp_db, 2) << " dB";
  o.require(pipe - sirt >= kOrderingGapDb, "pipeline vs SIRT gap");
  o.require(sirt - fbp_db >= kOrderingGapDb, "SIRT vs FBP gap");
}

void sinogram_ordering(const TestEvaluation& e, Outcome& o) {
  const double cg = mean_of(e.methods[kCgls].sino_psnr);
  const double sirt = mean_of(e.methods[kSirt].sino_psnr);
  const double pipe = mean_of(e.methods[kPipeline].sino_psnr);
  const double fbp_db = mean_of(e.methods[kFbp].sino_psnr);
  const double pipe_mse = mean_of(e.methods[kPipeline].sino_mse);
  const double dnn_mse = mean_of(e.last_dnn_sino_mse);
  o.detail << "sinogram PSNR CGLS-" << kCglsIterations << " " << fmt(cg, 2) << ", SIRT-" << kSirtIterations
           << " " << fmt(sirt, 2) << ", pipeline " << fmt(pipe, 2) << ", FBP " << fmt(fbp_db, 2)
           << " dB; sinogram MSE pipeline " << sci(pipe_mse) << " vs network output " << sci(dnn_mse);
  o.require(std::min(cg, sirt) - pipe >= kFidelityGapDb, "CGLS, SIRT >> pipeline");
  o.require(pipe > fbp_db, "pipeline > FBP");
  o.require(pipe_mse < dnn_mse, "final SIRT block improves fidelity");
}

void noise_sweep(const DeskRun& d, Outcome& o) {
  const std::vector<double> levels{1e3, 1e4, 1e5, 1e6};
  const std::uint64_t root = derive_seed(2024, "sweep");
  std::vector<TestEvaluation> runs;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    std::vector<Sinogram> noisy;
    for (std::size_t k = 0; k < d.test.size(); ++k) {
      const NoiseModel model{levels[l], d.attenuation_scale, derive_seed(derive_seed(root, l), k)};
      noisy.push_back(apply_poisson_noise(d.test[k].sinogram, model));
    }
    runs.push_back(evaluate_test_set(d, noisy, false));
  }
  o.detail << d.test.size() << " samples;";
  for (int m : {kFbp, kSirt, kCgls, kPipeline}) {
    o.detail << " " << kMethodNames[m] << ":";
    for (std::size_t l = 0; l < levels.size(); ++l) {
      o.detail << (l ? "/" : " ") << fmt(mean_of(runs[l].methods[m].psnr), 2);
      if (l == 0) continue;
      // Paired differences; a drop within the sampling noise of the mean is tolerated.
      const auto& lo = runs[l - 1].methods[m].psnr;
      const auto& hi = runs[l].methods[m].psnr;
      std::vector<double> diff(lo.size());
      for (std::size_t k = 0; k < lo.size(); ++k) diff[k] = hi[k] - lo[k];
      const auto ms = mean_std(diff);
      const double se = ms.std / std::sqrt(static_cast<double>(diff.size()));
      o.require(ms.mean >= -kSweepNoiseSigmas * se,
                std::string(kMethodNames[m]) + " drops between I0 levels");
    }
  }
  o.require(d.test.size() >= 50, "at least 50 samples");
}

// ------------------------------------------------------------------ 9

void metrics_suite(Outcome& o) {
  const std::vector<float> a{0.0f, 1.0f}, b{1.0f, 1.0f};
  o.require(mse(a, a) == 0.0, "mse identical");
  o.require(mse(a, b) == 0.5, "mse two-element");
  Image x(16);
  for (std::size_t i = 0; i < x.pixel_count(); ++i) x.values()[i] = static_cast<float>(i % 32) / 32.0f;
  Image shifted = x;
  for (float& v : shifted.values()) v += 0.5f;
  o.require(mse(x, shifted) == 0.25, "mse constant difference");
  o.require(std::abs(psnr_from_mse(1e-4) - 40.0) < 1e-12, "psnr 40 dB");
  o.require(psnr_from_mse(1.0) == 0.0, "psnr 0 dB");
  o.require(std::abs(psnr_from_mse(0.005) - psnr_from_mse(0.01) - 10.0 * std::log10(2.0)) < 1e-12,
            "halving mse");
  o.require(is_perfect_psnr(psnr(x, x)), "perfect psnr");

  double worst_identity = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Image y = random_image(24, 100 + s);
    worst_identity = std::max(worst_identity, std::abs(ssim(y, y) - 1.0));
  }
  o.require(worst_identity <= kSsimIdentityTol, "ssim identity");

  Image cb(16), inv(16);
  for (std::size_t r = 0; r < 16; ++r) {
    for (std::size_t c = 0; c < 16; ++c) {
      cb(r, c) = (r + c) % 2 ? 1.0f : 0.0f;
      inv(r, c) = 1.0f - cb(r, c);
    }
  }
  const double anti = ssim(cb, inv);
  const double oracle_anti = oracle::ssim_windows(to_double(cb.values()), to_double(inv.values()), 16, 16, 1.0);
  o.require(anti < 0.0 && std::abs(anti - oracle_anti) < 1e-10, "checkerboard ssim");
  const Image y = random_image(16, 10);
  o.require(ssim(x, y) == ssim(y, x), "ssim symmetry");

  bool duality = true;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Image u = random_image(8, 200 + s), v = random_image(8, 300 + s);
    duality = duality && psnr(u, v) == 10.0 * std::log10(1.0 / mse(u, v));
  }
  o.require(duality, "psnr/mse duality");

  const auto geom = ProjectionGeometry::parallel(16, 6);
  o.require(sinogram_fidelity("t", "a", x, forward_project(x, geom), geom).mse == 0.0,
            "exact projection fidelity");
  const std::vector<MetricEntry> one{{"m", MetricSpace::image, "a", 12.0, 0.1, 0.5}};
  o.require(aggregate_report(one).front().psnr_db.std == 0.0, "single entry sigma");
  const std::vector<MetricEntry> two{{"m", MetricSpace::image, "a", 10.0, 0.1, 0.5},
                                     {"m", MetricSpace::image, "b", 20.0, 0.1, 0.5}};
  const auto agg = aggregate_report(two).front();
  o.require(agg.psnr_db.mean == 15.0 && agg.psnr_db.std == 5.0, "mean 15 sigma 5");
  o.require(parse_csv(format_csv(two)) == two, "csv round trip");
  o.detail << "all examples exact; ssim identity max error " << sci(worst_identity)
           << ", checkerboard ssim " << fmt(anti, 4);
}

struct Runner {
  int failures = 0;

  void run(int id, const std::string& name, double budget, const std::function<void(Outcome&)>& body) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      body(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = seconds_since(t0);
    if (budget > 0.0 && secs >= budget) o.require(false, "runtime " + fmt(secs, 1) + " s");
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " " << name << " ("
              << fmt(secs, 1) << " s): " << o.detail.str() << std::endl;
  }
};

}  // namespace

int main() {
  Runner r;
  r.run(1, "operator correctness", kBudget1, operator_correctness);
  r.run(2, "SIRT convergence", kBudget2, sirt_behavior);
  r.run(3, "gradient suite", kBudget3, gradient_suite);
  r.run(4, "training smoke", kBudget4, training_smoke);

  std::cerr << "desk run: training 3 networks on 64x64, 20 angles\n";
  std::optional<DeskRun> desk;
  std::optional<TestEvaluation> clean;
  std::string setup_error;
  const auto t0 = Clock::now();
  try {
    desk = build_desk_run();
    std::vector<Sinogram> measured;
    for (const auto& s : desk->test) measured.push_back(s.sinogram);
    clean = evaluate_test_set(*desk, measured, true);
  } catch (const std::exception& e) {
    setup_error = e.what();
  }
  const double setup_seconds = seconds_since(t0);
  auto with_desk = [&](const std::function<void(Outcome&)>& body) {
    return [&, body](Outcome& o) {
      if (!desk || !clean) throw std::runtime_error("desk run failed: " + setup_error);
      body(o);
    };
  };
  r.run(5, "pipeline trends", 0.0, with_desk([&](Outcome& o) {
          pipeline_trends(*desk, *clean, o);
          o.detail << "; setup+evaluation " << fmt(setup_seconds, 0) << " s";
          o.require(setup_seconds < kBudget5, "runtime budget");
        }));
  r.run(6, "image-space ordering", 0.0, with_desk([&](Outcome& o) { image_ordering(*clean, o); }));
  r.run(7, "sinogram-space ordering", 0.0, with_desk([&](Outcome& o) { sinogram_ordering(*clean, o); }));
  r.run(8, "noise sweep", 0.0, with_desk([&](Outcome& o) { noise_sweep(*desk, o); }));
  r.run(9, "metrics suite", 0.0, metrics_suite);

  std::cout << (r.failures == 0 ? "all criteria passed" : std::to_string(r.failures) + " criteria failed")
            << std::endl;
  return r.failures == 0 ? 0 : 1;
}
