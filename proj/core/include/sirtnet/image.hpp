#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sirtnet {

/// Square n×n grid of attenuation values, row-major, 32-bit storage.
/// Row 0 is the top of the field of view.
class Image {
 public:
  Image() = default;
  explicit Image(std::size_t size, float fill = 0.0f);
  Image(std::size_t size, std::vector<float> values);

  std::size_t size() const noexcept { return size_; }
  std::size_t pixel_count() const noexcept { return values_.size(); }

  float& operator()(std::size_t row, std::size_t col) { return values_[row * size_ + col]; }
  float operator()(std::size_t row, std::size_t col) const { return values_[row * size_ + col]; }

  std::span<float> values() noexcept { return values_; }
  std::span<const float> values() const noexcept { return values_; }

  bool all_finite() const noexcept;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t size_ = 0;
  std::vector<float> values_;
};

/// Angle-major array of line integrals: value(a, d) is detector d at angle a.
class Sinogram {
 public:
  Sinogram() = default;
  Sinogram(std::size_t n_angles, std::size_t n_detectors, float fill = 0.0f);
  Sinogram(std::size_t n_angles, std::size_t n_detectors, std::vector<float> values);

  std::size_t n_angles() const noexcept { return n_angles_; }
  std::size_t n_detectors() const noexcept { return n_detectors_; }
  std::size_t ray_count() const noexcept { return values_.size(); }

  float& operator()(std::size_t angle, std::size_t det) { return values_[angle * n_detectors_ + det]; }
  float operator()(std::size_t angle, std::size_t det) const {
    return values_[angle * n_detectors_ + det];
  }

  std::span<float> values() noexcept { return values_; }
  std::span<const float> values() const noexcept { return values_; }

  bool all_finite() const noexcept;

  friend bool operator==(const Sinogram&, const Sinogram&) = default;

 private:
  std::size_t n_angles_ = 0;
  std::size_t n_detectors_ = 0;
  std::vector<float> values_;
};

std::vector<double> to_double(std::span<const float> values);
void store_float(std::span<const double> source, std::span<float> target);

}  // namespace sirtnet
