#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sirtnet/image.hpp"

namespace sirtnet {

/// Shape of a width-1 Mixed-Scale Dense network.
///
/// Hidden layer i (0-based) convolves the input image and the outputs of
/// layers 0..i-1 (i+1 channels) with a 3×3 kernel dilated by (i mod p) + 1,
/// adds a bias and applies ReLU. The output layer is a 1×1 convolution over
/// all d+1 channels followed by tanh.
///
/// Flat parameter layout: hidden layers 0..d-1, each as weights ordered
/// (channel, ky, kx) then bias; then the output layer's d+1 weights and bias.
struct MsdArchitecture {
  std::size_t depth = 0;
  std::size_t dilation_modulus = 10;

  std::size_t dilation(std::size_t layer) const noexcept { return layer % dilation_modulus + 1; }
  std::size_t in_channels(std::size_t layer) const noexcept { return layer + 1; }
  std::size_t hidden_weight_count(std::size_t layer) const noexcept { return 9 * (layer + 1); }
  std::size_t hidden_offset(std::size_t layer) const noexcept {
    return 9 * layer * (layer + 1) / 2 + layer;
  }
  std::size_t output_offset() const noexcept { return hidden_offset(depth); }
  std::size_t parameter_count() const noexcept { return output_offset() + depth + 2; }

  friend bool operator==(const MsdArchitecture&, const MsdArchitecture&) = default;
};

/// One dilated 3×3 kernel over `in_channels` inputs, weights (channel, ky, kx).
struct ConvKernel {
  std::size_t in_channels = 1;
  std::size_t dilation = 1;
  std::vector<double> weights;  // 9 · in_channels
  double bias = 0.0;
};

/// Stack of `channels` n×n maps, channel-major.
struct FeatureMaps {
  std::size_t channels = 0;
  std::size_t size = 0;
  std::vector<double> values;

  FeatureMaps() = default;
  FeatureMaps(std::size_t channels_, std::size_t size_)
      : channels(channels_), size(size_), values(channels_ * size_ * size_, 0.0) {}

  std::span<double> channel(std::size_t c) {
    return std::span(values).subspan(c * size * size, size * size);
  }
  std::span<const double> channel(std::size_t c) const {
    return std::span(values).subspan(c * size * size, size * size);
  }
};

/// Same-size dilated convolution with zero padding; returns the
/// pre-activation map (bias included).
std::vector<double> conv2d_dilated(const FeatureMaps& input, const ConvKernel& kernel);

class MsdNetwork {
 public:
  MsdNetwork() = default;
  MsdNetwork(std::size_t depth, std::size_t dilation_modulus);
  explicit MsdNetwork(MsdArchitecture arch);

  const MsdArchitecture& architecture() const noexcept { return arch_; }

  std::span<const float> parameters() const noexcept { return params_; }
  /// Mutable access marks the network as changed; tapes recorded before
  /// this call are rejected by msd_backward.
  std::span<float> mutable_parameters();
  void set_parameters(std::span<const float> values);
  std::vector<double> parameters_as_double() const;

  /// Identifies the current parameter state; unique per mutation.
  std::uint64_t version() const noexcept { return version_; }

  ConvKernel hidden_kernel(std::size_t layer) const;
  ConvKernel output_kernel() const;  // dilation 1, one weight per channel

  friend bool operator==(const MsdNetwork& a, const MsdNetwork& b) {
    return a.arch_ == b.arch_ && a.params_ == b.params_;
  }

 private:
  void touch();

  MsdArchitecture arch_;
  std::vector<float> params_;
  std::uint64_t version_ = 0;
};

/// Activation record of one forward pass.
struct ForwardTape {
  std::uint64_t network_version = 0;
  MsdArchitecture arch;
  FeatureMaps channels;        // input + all hidden outputs (post-ReLU)
  std::vector<double> output;  // tanh output, n·n
};

struct ForwardResult {
  Image output;
  ForwardTape tape;
};

ForwardResult msd_forward(const MsdNetwork& net, const Image& input);
Image msd_infer(const MsdNetwork& net, const Image& input);

/// Double-precision forward with explicit parameters (used by gradient checks).
ForwardTape msd_forward(const MsdArchitecture& arch, std::span<const double> params,
                        std::span<const double> input, std::size_t size);

/// d(loss)/d(params) given d(loss)/d(output) (n·n values).
std::vector<double> msd_backward(const MsdNetwork& net, const ForwardTape& tape,
                                 std::span<const double> loss_gradient);

/// Accumulates into `grads` (parameter_count values).
void msd_backward(const MsdArchitecture& arch, std::span<const double> params,
                  const ForwardTape& tape, std::span<const double> loss_gradient,
                  std::span<double> grads);

/// Inputs and regression targets of equal shape.
struct Batch {
  std::vector<Image> inputs;
  std::vector<Image> targets;

  std::size_t size() const noexcept { return inputs.size(); }
};

/// 1/(B·H·W) Σ (O - t)².
double mse_loss(std::span<const Image> outputs, std::span<const Image> targets);

/// Loss of the network over every sample of a batch.
double evaluate_loss(const MsdNetwork& net, const Batch& data, std::size_t threads = 1);

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;

  AdamState() = default;
  AdamState(std::size_t parameter_count, AdamConfig cfg)
      : config(cfg), m(parameter_count, 0.0), v(parameter_count, 0.0) {}
};

void adam_update(std::span<float> params, std::span<const double> grads, AdamState& state);
void adam_update(MsdNetwork& net, std::span<const double> grads, AdamState& state);

/// Every weight and bias i.i.d. uniform in [lo, hi).
void init_uniform(MsdNetwork& net, double lo, double hi, std::uint64_t seed);

/// One pass over `data` in seeded random order. Each batch runs
/// forward/backward per sample (optionally on `threads` workers), sums the
/// per-sample gradients in sample order and takes one ADAM step. The last
/// partial batch is used at its actual size. Returns the mean per-batch loss
/// measured before each update.
double train_epoch(MsdNetwork& net, const Batch& data, std::size_t batch_size,
                   AdamState& adam, std::uint64_t seed, std::size_t threads = 1);

}  // namespace sirtnet
