#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "sirtnet/geometry.hpp"
#include "sirtnet/image.hpp"

namespace sirtnet {

/// Diagonals of R (per ray) and C (per pixel) for one geometry.
struct SirtWeights {
  std::vector<double> row;  // length m
  std::vector<double> col;  // length n·n

  static std::shared_ptr<const SirtWeights> compute(const ProjectionGeometry& geom);
};

/// Iterate x^k of x^{k+1} = x^k + C Wᵀ R (p - W x^k), no relaxation.
class SirtState {
 public:
  SirtState(ProjectionGeometry geom, Sinogram target, Image x0,
            std::shared_ptr<const SirtWeights> weights = nullptr);

  const Image& x() const noexcept { return x_; }
  std::size_t iteration() const noexcept { return k_; }
  const ProjectionGeometry& geometry() const noexcept { return geom_; }
  const Sinogram& target() const noexcept { return p_; }
  const SirtWeights& weights() const noexcept { return *weights_; }

  void advance();

  /// Σ_i r_ii (W x^k - p)_i².
  double weighted_residual() const;

 private:
  ProjectionGeometry geom_;
  Sinogram p_;
  Image x_;
  std::size_t k_ = 0;
  std::shared_ptr<const SirtWeights> weights_;
};

SirtState sirt_step(SirtState state);

Image sirt_run(const Image& x0, const Sinogram& p, const ProjectionGeometry& geom,
               std::size_t n_iters, std::shared_ptr<const SirtWeights> weights = nullptr);

double weighted_residual(const Image& x, const Sinogram& p, const ProjectionGeometry& geom);

/// Ram-Lak filtered back projection. The ramp is applied in the frequency
/// domain on rows zero-padded to the next power of two ≥ 2·n_detectors, and
/// the backprojection is scaled by π / (2·n_angles).
Image fbp(const Sinogram& p, const ProjectionGeometry& geom);

/// Detector-axis Ram-Lak filtering alone (exposed for testing).
Sinogram ramp_filter(const Sinogram& p, const ProjectionGeometry& geom);

struct CglsTrace {
  std::vector<double> residual_norms;  // ‖Wx - p‖₂ after each iteration, index 0 = start
  std::size_t iterations = 0;
  bool stagnated = false;
};

/// Conjugate gradient on the normal equations of min ‖Wx - p‖₂, from x = 0.
Image cgls(const Sinogram& p, const ProjectionGeometry& geom, std::size_t n_iters,
           CglsTrace* trace = nullptr);

}  // namespace sirtnet
