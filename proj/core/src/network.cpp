#include "sirtnet/network.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <string>

#include "sirtnet/error.hpp"
#include "sirtnet/parallel.hpp"
#include "sirtnet/random.hpp"

namespace sirtnet {

namespace {

std::uint64_t next_version() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

// dst[y][x] += w · src[y+dy][x+dx] wherever the source index is inside the grid.
void shifted_axpy(const double* src, double* dst, std::ptrdiff_t n, std::ptrdiff_t dy,
                  std::ptrdiff_t dx, double w) {
  const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(0, -dy);
  const std::ptrdiff_t y1 = std::min<std::ptrdiff_t>(n, n - dy);
  const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
  const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(n, n - dx);
  for (std::ptrdiff_t y = y0; y < y1; ++y) {
    const double* s = src + (y + dy) * n + dx;
    double* d = dst + y * n;
    for (std::ptrdiff_t x = x0; x < x1; ++x) d[x] += w * s[x];
  }
}

// Σ_{y,x} a[y][x] · b[y+dy][x+dx] over the valid region.
double shifted_dot(const double* a, const double* b, std::ptrdiff_t n, std::ptrdiff_t dy,
                   std::ptrdiff_t dx) {
  const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(0, -dy);
  const std::ptrdiff_t y1 = std::min<std::ptrdiff_t>(n, n - dy);
  const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
  const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(n, n - dx);
  double acc = 0.0;
  for (std::ptrdiff_t y = y0; y < y1; ++y) {
    const double* ra = a + y * n;
    const double* rb = b + (y + dy) * n + dx;
    for (std::ptrdiff_t x = x0; x < x1; ++x) acc += ra[x] * rb[x];
  }
  return acc;
}

// out += conv(channels[0..in_channels), weights) with the given dilation.
void conv_accumulate(const FeatureMaps& maps, std::size_t in_channels, std::size_t dilation,
                     std::span<const double> weights, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(maps.size);
  const auto dil = static_cast<std::ptrdiff_t>(dilation);
  for (std::size_t c = 0; c < in_channels; ++c) {
    const double* src = maps.channel(c).data();
    for (std::ptrdiff_t ky = 0; ky < 3; ++ky) {
      for (std::ptrdiff_t kx = 0; kx < 3; ++kx) {
        const double w = weights[c * 9 + static_cast<std::size_t>(ky * 3 + kx)];
        if (w == 0.0) continue;
        shifted_axpy(src, out.data(), n, (ky - 1) * dil, (kx - 1) * dil, w);
      }
    }
  }
}

void require_architecture(const MsdArchitecture& arch) {
  if (arch.depth == 0) throw InvalidInput("MsdNetwork: depth must be at least 1");
  if (arch.dilation_modulus == 0) throw InvalidInput("MsdNetwork: dilation modulus must be >= 1");
}

}  // namespace

std::vector<double> conv2d_dilated(const FeatureMaps& input, const ConvKernel& kernel) {
  if (kernel.dilation == 0) throw InvalidInput("conv2d_dilated: dilation must be >= 1");
  if (input.channels != kernel.in_channels) {
    throw InvalidInput("conv2d_dilated: input has " + std::to_string(input.channels) +
                       " channels, kernel expects " + std::to_string(kernel.in_channels));
  }
  if (kernel.weights.size() != 9 * kernel.in_channels) {
    throw InvalidInput("conv2d_dilated: kernel must hold 9 weights per channel");
  }
  if (input.values.size() != input.channels * input.size * input.size) {
    throw InvalidInput("conv2d_dilated: feature map buffer has the wrong length");
  }
  std::vector<double> out(input.size * input.size, kernel.bias);
  conv_accumulate(input, kernel.in_channels, kernel.dilation, kernel.weights, out);
  return out;
}

MsdNetwork::MsdNetwork(std::size_t depth, std::size_t dilation_modulus)
    : MsdNetwork(MsdArchitecture{depth, dilation_modulus}) {}

MsdNetwork::MsdNetwork(MsdArchitecture arch) : arch_(arch) {
  require_architecture(arch_);
  params_.assign(arch_.parameter_count(), 0.0f);
  touch();
}

void MsdNetwork::touch() { version_ = next_version(); }

std::span<float> MsdNetwork::mutable_parameters() {
  touch();
  return params_;
}

void MsdNetwork::set_parameters(std::span<const float> values) {
  if (values.size() != params_.size()) {
    throw InvalidInput("MsdNetwork: expected " + std::to_string(params_.size()) +
                       " parameters, got " + std::to_string(values.size()));
  }
  std::copy(values.begin(), values.end(), params_.begin());
  touch();
}

std::vector<double> MsdNetwork::parameters_as_double() const { return to_double(params_); }

ConvKernel MsdNetwork::hidden_kernel(std::size_t layer) const {
  if (layer >= arch_.depth) throw InvalidInput("hidden_kernel: layer out of range");
  const std::size_t off = arch_.hidden_offset(layer);
  const std::size_t count = arch_.hidden_weight_count(layer);
  ConvKernel k;
  k.in_channels = arch_.in_channels(layer);
  k.dilation = arch_.dilation(layer);
  k.weights.assign(params_.begin() + static_cast<std::ptrdiff_t>(off),
                   params_.begin() + static_cast<std::ptrdiff_t>(off + count));
  k.bias = params_[off + count];
  return k;
}

ConvKernel MsdNetwork::output_kernel() const {
  const std::size_t off = arch_.output_offset();
  ConvKernel k;
  k.in_channels = arch_.depth + 1;
  k.dilation = 1;
  k.weights.assign(params_.begin() + static_cast<std::ptrdiff_t>(off),
                   params_.begin() + static_cast<std::ptrdiff_t>(off + arch_.depth + 1));
  k.bias = params_[off + arch_.depth + 1];
  return k;
}

ForwardTape msd_forward(const MsdArchitecture& arch, std::span<const double> params,
                        std::span<const double> input, std::size_t size) {
  require_architecture(arch);
  if (params.size() != arch.parameter_count()) {
    throw InvalidInput("msd_forward: parameter vector has the wrong length");
  }
  if (input.size() != size * size) throw InvalidInput("msd_forward: input has the wrong length");

  ForwardTape tape;
  tape.arch = arch;
  tape.channels = FeatureMaps(arch.depth + 1, size);
  std::copy(input.begin(), input.end(), tape.channels.channel(0).begin());

  for (std::size_t layer = 0; layer < arch.depth; ++layer) {
    const std::size_t off = arch.hidden_offset(layer);
    const std::size_t count = arch.hidden_weight_count(layer);
    auto out = tape.channels.channel(layer + 1);
    std::fill(out.begin(), out.end(), params[off + count]);
    conv_accumulate(tape.channels, arch.in_channels(layer), arch.dilation(layer),
                    params.subspan(off, count), out);
    for (double& v : out) v = v > 0.0 ? v : 0.0;
  }

  const std::size_t off = arch.output_offset();
  std::vector<double> pre(size * size, params[off + arch.depth + 1]);
  for (std::size_t c = 0; c <= arch.depth; ++c) {
    const double w = params[off + c];
    const auto ch = tape.channels.channel(c);
    for (std::size_t i = 0; i < pre.size(); ++i) pre[i] += w * ch[i];
  }
  for (double& v : pre) v = std::tanh(v);
  tape.output = std::move(pre);
  return tape;
}

ForwardResult msd_forward(const MsdNetwork& net, const Image& input) {
  const auto params = net.parameters_as_double();
  ForwardTape tape = msd_forward(net.architecture(), params, to_double(input.values()), input.size());
  tape.network_version = net.version();
  Image out(input.size());
  store_float(tape.output, out.values());
  // tanh saturates to exactly ±1 in float; keep the output inside (-1, 1).
  const float bound = std::nextafter(1.0f, 0.0f);
  for (float& v : out.values()) v = std::clamp(v, -bound, bound);
  return {std::move(out), std::move(tape)};
}

Image msd_infer(const MsdNetwork& net, const Image& input) {
  return msd_forward(net, input).output;
}

void msd_backward(const MsdArchitecture& arch, std::span<const double> params,
                  const ForwardTape& tape, std::span<const double> loss_gradient,
                  std::span<double> grads) {
  if (!(tape.arch == arch)) throw InvalidInput("msd_backward: tape architecture mismatch");
  if (params.size() != arch.parameter_count() || grads.size() != arch.parameter_count()) {
    throw InvalidInput("msd_backward: parameter/gradient vector has the wrong length");
  }
  const std::size_t size = tape.channels.size;
  const std::size_t pixels = size * size;
  if (loss_gradient.size() != pixels || tape.output.size() != pixels) {
    throw InvalidInput("msd_backward: loss gradient does not match the tape");
  }
  const auto n = static_cast<std::ptrdiff_t>(size);

  // Gradient w.r.t. each channel of the dense stack.
  FeatureMaps channel_grad(arch.depth + 1, size);

  // Output layer: out = tanh(Σ_c w_c ch_c + b).
  std::vector<double> g_pre(pixels);
  for (std::size_t i = 0; i < pixels; ++i) {
    const double o = tape.output[i];
    g_pre[i] = loss_gradient[i] * (1.0 - o * o);
  }
  const std::size_t out_off = arch.output_offset();
  for (std::size_t c = 0; c <= arch.depth; ++c) {
    const auto ch = tape.channels.channel(c);
    grads[out_off + c] += std::inner_product(g_pre.begin(), g_pre.end(), ch.begin(), 0.0);
    const double w = params[out_off + c];
    auto gc = channel_grad.channel(c);
    for (std::size_t i = 0; i < pixels; ++i) gc[i] += w * g_pre[i];
  }
  grads[out_off + arch.depth + 1] += std::accumulate(g_pre.begin(), g_pre.end(), 0.0);

  // Hidden layers in reverse; layer i writes channel i+1 and reads 0..i.
  for (std::size_t layer = arch.depth; layer-- > 0;) {
    const auto act = tape.channels.channel(layer + 1);
    const auto upstream = channel_grad.channel(layer + 1);
    for (std::size_t i = 0; i < pixels; ++i) g_pre[i] = act[i] > 0.0 ? upstream[i] : 0.0;

    const std::size_t off = arch.hidden_offset(layer);
    const std::size_t count = arch.hidden_weight_count(layer);
    grads[off + count] += std::accumulate(g_pre.begin(), g_pre.end(), 0.0);

    const auto dil = static_cast<std::ptrdiff_t>(arch.dilation(layer));
    for (std::size_t c = 0; c < arch.in_channels(layer); ++c) {
      const double* src = tape.channels.channel(c).data();
      double* gsrc = channel_grad.channel(c).data();
      for (std::ptrdiff_t ky = 0; ky < 3; ++ky) {
        for (std::ptrdiff_t kx = 0; kx < 3; ++kx) {
          const std::size_t widx = off + c * 9 + static_cast<std::size_t>(ky * 3 + kx);
          const std::ptrdiff_t dy = (ky - 1) * dil;
          const std::ptrdiff_t dx = (kx - 1) * dil;
          grads[widx] += shifted_dot(g_pre.data(), src, n, dy, dx);
          // The input channel is not a parameter; skip its gradient.
          if (c > 0) shifted_axpy(g_pre.data(), gsrc, n, -dy, -dx, params[widx]);
        }
      }
    }
  }
}

std::vector<double> msd_backward(const MsdNetwork& net, const ForwardTape& tape,
                                 std::span<const double> loss_gradient) {
  if (tape.network_version != net.version()) {
    throw InvalidInput("msd_backward: tape was recorded for a different parameter state");
  }
  std::vector<double> grads(net.architecture().parameter_count(), 0.0);
  msd_backward(net.architecture(), net.parameters_as_double(), tape, loss_gradient, grads);
  return grads;
}

double mse_loss(std::span<const Image> outputs, std::span<const Image> targets) {
  if (outputs.size() != targets.size()) throw InvalidInput("mse_loss: batch size mismatch");
  if (outputs.empty()) throw InvalidInput("mse_loss: empty batch");
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    const auto o = outputs[k].values();
    const auto t = targets[k].values();
    if (o.size() != t.size() || outputs[k].size() != targets[k].size()) {
      throw InvalidInput("mse_loss: image shape mismatch");
    }
    for (std::size_t i = 0; i < o.size(); ++i) {
      const double d = static_cast<double>(o[i]) - static_cast<double>(t[i]);
      acc += d * d;
    }
    count += o.size();
  }
  return acc / static_cast<double>(count);
}

namespace {

struct SampleResult {
  double squared_error = 0.0;
  std::size_t pixels = 0;
  std::vector<double> grads;
};

// Squared error of one sample and, when `with_grads`, the gradient of
// (1/denominator)·Σ(O - t)² with respect to the parameters.
SampleResult run_sample(const MsdArchitecture& arch, std::span<const double> params,
                        const Image& input, const Image& target, double denominator,
                        bool with_grads) {
  if (input.size() != target.size()) throw InvalidInput("training sample shape mismatch");
  SampleResult r;
  const ForwardTape tape = msd_forward(arch, params, to_double(input.values()), input.size());
  const auto t = target.values();
  std::vector<double> dloss(tape.output.size());
  for (std::size_t i = 0; i < dloss.size(); ++i) {
    const double diff = tape.output[i] - static_cast<double>(t[i]);
    r.squared_error += diff * diff;
    dloss[i] = 2.0 * diff / denominator;
  }
  r.pixels = dloss.size();
  if (with_grads) {
    r.grads.assign(arch.parameter_count(), 0.0);
    msd_backward(arch, params, tape, dloss, r.grads);
  }
  return r;
}

}  // namespace

double evaluate_loss(const MsdNetwork& net, const Batch& data, std::size_t threads) {
  if (data.inputs.size() != data.targets.size()) throw InvalidInput("evaluate_loss: batch mismatch");
  if (data.inputs.empty()) throw InvalidInput("evaluate_loss: empty batch");
  const auto params = net.parameters_as_double();
  std::vector<SampleResult> results(data.size());
  parallel_for(data.size(), threads, [&](std::size_t k) {
    results[k] = run_sample(net.architecture(), params, data.inputs[k], data.targets[k], 1.0, false);
  });
  double acc = 0.0;
  std::size_t count = 0;
  for (const auto& r : results) {
    acc += r.squared_error;
    count += r.pixels;
  }
  return acc / static_cast<double>(count);
}

void adam_update(std::span<float> params, std::span<const double> grads, AdamState& state) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw InvalidInput("adam_update: parameter, gradient and moment sizes differ");
  }
  const auto& cfg = state.config;
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double bias1 = 1.0 - std::pow(cfg.beta1, t);
  const double bias2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / bias1;
    const double v_hat = state.v[i] / bias2;
    const double step = cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    params[i] = static_cast<float>(static_cast<double>(params[i]) - step);
  }
}

void adam_update(MsdNetwork& net, std::span<const double> grads, AdamState& state) {
  adam_update(net.mutable_parameters(), grads, state);
}

void init_uniform(MsdNetwork& net, double lo, double hi, std::uint64_t seed) {
  if (!(lo < hi)) throw InvalidInput("init_uniform: requires lo < hi");
  Rng rng(seed);
  for (float& p : net.mutable_parameters()) {
    // Clamp guards against rounding up to `hi` in the float conversion.
    p = std::min(static_cast<float>(rng.uniform(lo, hi)), std::nextafter(static_cast<float>(hi),
                                                                          static_cast<float>(lo)));
  }
}

double train_epoch(MsdNetwork& net, const Batch& data, std::size_t batch_size, AdamState& adam,
                   std::uint64_t seed, std::size_t threads) {
  if (data.inputs.size() != data.targets.size()) throw InvalidInput("train_epoch: batch mismatch");
  if (data.inputs.empty()) throw InvalidInput("train_epoch: empty dataset");
  if (batch_size == 0) throw InvalidInput("train_epoch: batch_size must be >= 1");
  const auto& arch = net.architecture();
  if (adam.m.size() != arch.parameter_count()) {
    throw InvalidInput("train_epoch: optimizer state does not match the network");
  }

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span(order));

  double loss_sum = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t count = std::min(batch_size, order.size() - start);
    const auto params = net.parameters_as_double();
    const double denominator =
        static_cast<double>(count) * static_cast<double>(data.inputs[order[start]].pixel_count());

    std::vector<SampleResult> results(count);
    parallel_for(count, threads, [&](std::size_t k) {
      const std::size_t idx = order[start + k];
      results[k] = run_sample(arch, params, data.inputs[idx], data.targets[idx], denominator, true);
    });

    std::vector<double> grads(arch.parameter_count(), 0.0);
    double squared = 0.0;
    std::size_t pixels = 0;
    for (const auto& r : results) {
      for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += r.grads[i];
      squared += r.squared_error;
      pixels += r.pixels;
    }
    loss_sum += squared / static_cast<double>(pixels);
    ++batches;
    adam_update(net, grads, adam);
  }
  return loss_sum / static_cast<double>(batches);
}

}  // namespace sirtnet
