#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sirtnet/image.hpp"

namespace sirtnet {

/// 2D parallel-beam acquisition bound to an n×n image grid.
///
/// The image has unit pixel pitch and is centered at the origin: pixel
/// (row, col) sits at x = col - (n-1)/2, y = (n-1)/2 - row. Ray (a, d) is the
/// line x·cos(θ_a) + y·sin(θ_a) = t_d with t_d = (d - (n_det-1)/2)·spacing.
/// The projection matrix W defined by this geometry is never formed; see
/// forward_project / back_project.
class ProjectionGeometry {
 public:
  /// Equidistant angles θ_k = k·π/n_angles. n_detectors defaults to image_size.
  static ProjectionGeometry parallel(std::size_t image_size, std::size_t n_angles,
                                     std::optional<std::size_t> n_detectors = std::nullopt,
                                     double detector_spacing = 1.0);

  /// Explicit angle list; must be strictly increasing within [0, π).
  static ProjectionGeometry with_angles(std::size_t image_size, std::vector<double> angles,
                                        std::optional<std::size_t> n_detectors = std::nullopt,
                                        double detector_spacing = 1.0);

  std::size_t image_size() const noexcept { return image_size_; }
  std::size_t n_angles() const noexcept { return angles_.size(); }
  std::size_t n_detectors() const noexcept { return n_detectors_; }
  double detector_spacing() const noexcept { return detector_spacing_; }
  const std::vector<double>& angles() const noexcept { return angles_; }

  /// m = n_angles · n_detectors.
  std::size_t ray_count() const noexcept { return angles_.size() * n_detectors_; }
  std::size_t pixel_count() const noexcept { return image_size_ * image_size_; }

  double detector_position(std::size_t det) const noexcept;

  /// True when the detector spans the image diagonal, i.e. no pixel can fall
  /// outside every ray.
  bool covers_diagonal() const noexcept;
  std::vector<std::string> warnings() const;

  void require_image(const Image& image) const;
  void require_sinogram(const Sinogram& sino) const;

  Image make_image(float fill = 0.0f) const { return Image(image_size_, fill); }
  Sinogram make_sinogram(float fill = 0.0f) const {
    return Sinogram(n_angles(), n_detectors_, fill);
  }

  friend bool operator==(const ProjectionGeometry&, const ProjectionGeometry&) = default;

 private:
  ProjectionGeometry() = default;
  void validate() const;

  std::size_t image_size_ = 0;
  std::size_t n_detectors_ = 0;
  double detector_spacing_ = 1.0;
  std::vector<double> angles_;
};

void to_json(nlohmann::json& j, const ProjectionGeometry& geom);
ProjectionGeometry geometry_from_json(const nlohmann::json& j);

// Joseph projector: each ray is stepped along its dominant axis and the two
// pixels straddling the ray are weighted by linear interpolation, scaled by
// the path length per step. back_project uses the identical weights, so the
// pair is exactly adjoint up to rounding.

Sinogram forward_project(const Image& image, const ProjectionGeometry& geom);
Image back_project(const Sinogram& sino, const ProjectionGeometry& geom);

/// Double-precision variants over flat buffers (pixel_count / ray_count).
void forward_project(std::span<const double> image, std::span<double> sino,
                     const ProjectionGeometry& geom);
void back_project(std::span<const double> sino, std::span<double> image,
                  const ProjectionGeometry& geom);

/// r_i = 1 / Σ_j w_ij, zero for rays that miss the grid.
std::vector<float> inverse_row_sums(const ProjectionGeometry& geom);
/// c_j = 1 / Σ_i w_ij, zero for pixels no ray touches.
Image inverse_col_sums(const ProjectionGeometry& geom);

}  // namespace sirtnet
