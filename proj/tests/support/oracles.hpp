#pragma once

// Reference implementations used only by tests. They are written for
// clarity, not speed, and share no code with the library.

#include <cstddef>
#include <span>
#include <vector>

#include "sirtnet/geometry.hpp"

namespace oracle {

struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major

  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  std::vector<double> apply(std::span<const double> x) const;
  std::vector<double> apply_transpose(std::span<const double> y) const;
};

/// Explicit projection matrix: for each ray, every pixel gets the
/// triangle-function distance weight max(0, 1 - |offset|) between the pixel
/// center and the ray, measured along the axis the ray crosses more slowly,
/// divided by the ray's direction cosine on the other axis.
DenseMatrix projection_matrix(const sirtnet::ProjectionGeometry& geom);

/// Length of the line x·cos(θ) + y·sin(θ) = t inside the unit square
/// centered at (cx, cy), by clipping the parametric line against the square.
double ray_square_length(double theta, double t, double cx, double cy);

/// Pre-activation of a dilated 3×3 cross-correlation, zero padded:
/// out(y, x) = b + Σ_c Σ_{ky,kx} w[c][ky][kx] · in[c](y + (ky-1)·d, x + (kx-1)·d).
std::vector<double> direct_conv(const std::vector<std::vector<double>>& channels, std::size_t n,
                                std::span<const double> weights, double bias,
                                std::size_t dilation);

/// Width-1 mixed-scale dense network evaluated pixel by pixel from the flat
/// parameter vector, walking the parameters sequentially.
std::vector<double> msd_forward_direct(std::size_t depth, std::size_t dilation_modulus,
                                       std::span<const double> params,
                                       std::span<const double> input, std::size_t n);

/// Mean SSIM computed window by window with explicitly tabulated Gaussian
/// weights (σ = 1.5, side `window`), valid positions only.
double ssim_windows(std::span<const double> a, std::span<const double> b, std::size_t rows,
                    std::size_t cols, double data_range, std::size_t window = 11);

}  // namespace oracle
