#include "sirtnet/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sirtnet/error.hpp"

namespace sirtnet {

Image::Image(std::size_t size, float fill) : size_(size), values_(size * size, fill) {}

Image::Image(std::size_t size, std::vector<float> values) : size_(size), values_(std::move(values)) {
  if (values_.size() != size * size) {
    throw InvalidInput("Image: expected " + std::to_string(size * size) + " values, got " +
                       std::to_string(values_.size()));
  }
}

bool Image::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](float v) { return std::isfinite(v); });
}

Sinogram::Sinogram(std::size_t n_angles, std::size_t n_detectors, float fill)
    : n_angles_(n_angles), n_detectors_(n_detectors), values_(n_angles * n_detectors, fill) {}

Sinogram::Sinogram(std::size_t n_angles, std::size_t n_detectors, std::vector<float> values)
    : n_angles_(n_angles), n_detectors_(n_detectors), values_(std::move(values)) {
  if (values_.size() != n_angles * n_detectors) {
    throw InvalidInput("Sinogram: expected " + std::to_string(n_angles * n_detectors) +
                       " values, got " + std::to_string(values_.size()));
  }
}

bool Sinogram::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](float v) { return std::isfinite(v); });
}

std::vector<double> to_double(std::span<const float> values) {
  return {values.begin(), values.end()};
}

void store_float(std::span<const double> source, std::span<float> target) {
  if (source.size() != target.size()) {
    throw InvalidInput("store_float: size mismatch");
  }
  std::transform(source.begin(), source.end(), target.begin(),
                 [](double v) { return static_cast<float>(v); });
}

}  // namespace sirtnet
