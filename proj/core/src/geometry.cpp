#include "sirtnet/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sirtnet/error.hpp"

namespace sirtnet {

ProjectionGeometry ProjectionGeometry::parallel(std::size_t image_size, std::size_t n_angles,
                                                std::optional<std::size_t> n_detectors,
                                                double detector_spacing) {
  std::vector<double> angles(n_angles);
  for (std::size_t k = 0; k < n_angles; ++k) {
    angles[k] = static_cast<double>(k) * std::numbers::pi / static_cast<double>(n_angles);
  }
  return with_angles(image_size, std::move(angles), n_detectors, detector_spacing);
}

ProjectionGeometry ProjectionGeometry::with_angles(std::size_t image_size,
                                                   std::vector<double> angles,
                                                   std::optional<std::size_t> n_detectors,
                                                   double detector_spacing) {
  ProjectionGeometry g;
  g.image_size_ = image_size;
  g.n_detectors_ = n_detectors.value_or(image_size);
  g.detector_spacing_ = detector_spacing;
  g.angles_ = std::move(angles);
  g.validate();
  return g;
}

void ProjectionGeometry::validate() const {
  if (image_size_ == 0) throw InvalidInput("geometry: image_size must be positive");
  if (n_detectors_ == 0) throw InvalidInput("geometry: n_detectors must be positive");
  if (angles_.empty()) throw InvalidInput("geometry: at least one angle is required");
  if (!(detector_spacing_ > 0.0) || !std::isfinite(detector_spacing_)) {
    throw InvalidInput("geometry: detector_spacing must be positive and finite");
  }
  for (std::size_t k = 0; k < angles_.size(); ++k) {
    const double a = angles_[k];
    if (!std::isfinite(a) || a < 0.0 || a >= std::numbers::pi) {
      throw InvalidInput("geometry: angle " + std::to_string(k) + " outside [0, pi)");
    }
    if (k > 0 && !(a > angles_[k - 1])) {
      throw InvalidInput("geometry: angles must be strictly increasing");
    }
  }
}

double ProjectionGeometry::detector_position(std::size_t det) const noexcept {
  return (static_cast<double>(det) - 0.5 * static_cast<double>(n_detectors_ - 1)) *
         detector_spacing_;
}

bool ProjectionGeometry::covers_diagonal() const noexcept {
  const double extent = static_cast<double>(n_detectors_) * detector_spacing_;
  return extent >= std::sqrt(2.0) * static_cast<double>(image_size_);
}

std::vector<std::string> ProjectionGeometry::warnings() const {
  std::vector<std::string> out;
  if (!covers_diagonal()) {
    std::ostringstream msg;
    msg << "detector width " << static_cast<double>(n_detectors_) * detector_spacing_
        << " does not cover the image diagonal "
        << std::sqrt(2.0) * static_cast<double>(image_size_)
        << "; corner pixels are only partially sampled";
    out.push_back(msg.str());
  }
  return out;
}

void ProjectionGeometry::require_image(const Image& image) const {
  if (image.size() != image_size_) {
    throw InvalidInput("image size " + std::to_string(image.size()) +
                       " does not match geometry image_size " + std::to_string(image_size_));
  }
}

void ProjectionGeometry::require_sinogram(const Sinogram& sino) const {
  if (sino.n_angles() != n_angles() || sino.n_detectors() != n_detectors_) {
    throw InvalidInput("sinogram shape " + std::to_string(sino.n_angles()) + "x" +
                       std::to_string(sino.n_detectors()) + " does not match geometry " +
                       std::to_string(n_angles()) + "x" + std::to_string(n_detectors_));
  }
}

void to_json(nlohmann::json& j, const ProjectionGeometry& geom) {
  j = nlohmann::json{{"n_angles", geom.n_angles()},
                     {"n_detectors", geom.n_detectors()},
                     {"image_size", geom.image_size()},
                     {"detector_spacing", geom.detector_spacing()},
                     {"angles", geom.angles()}};
}

ProjectionGeometry geometry_from_json(const nlohmann::json& j) {
  static const char* const known[] = {"n_angles", "n_detectors", "image_size",
                                      "detector_spacing", "angles"};
  if (!j.is_object()) throw InvalidInput("geometry: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      throw InvalidInput("geometry: unknown key '" + key + "'");
    }
  }
  try {
    const auto image_size = j.at("image_size").get<std::size_t>();
    std::optional<std::size_t> n_det;
    if (j.contains("n_detectors")) n_det = j.at("n_detectors").get<std::size_t>();
    const double spacing = j.value("detector_spacing", 1.0);
    if (j.contains("angles") && !j.at("angles").empty()) {
      auto angles = j.at("angles").get<std::vector<double>>();
      if (j.contains("n_angles") && j.at("n_angles").get<std::size_t>() != angles.size()) {
        throw InvalidInput("geometry: n_angles disagrees with the angles list");
      }
      return ProjectionGeometry::with_angles(image_size, std::move(angles), n_det, spacing);
    }
    return ProjectionGeometry::parallel(image_size, j.at("n_angles").get<std::size_t>(), n_det,
                                        spacing);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("geometry: ") + e.what());
  }
}

namespace {

struct AngleFrame {
  std::size_t n;
  double half;  // (n-1)/2
  double cos_t;
  double sin_t;
  bool step_columns;  // |sin| >= |cos|: the ray runs closer to the x axis
  double step_weight;

  AngleFrame(std::size_t size, double theta)
      : n(size),
        half(0.5 * static_cast<double>(size - 1)),
        cos_t(std::cos(theta)),
        sin_t(std::sin(theta)),
        step_columns(std::abs(sin_t) >= std::abs(cos_t)),
        step_weight(1.0 / (step_columns ? std::abs(sin_t) : std::abs(cos_t))) {}
};

// Calls visit(pixel_index, weight) for every pixel the ray touches.
template <class Visit>
inline void trace_ray(const AngleFrame& f, double t, Visit&& visit) {
  const auto n = static_cast<std::ptrdiff_t>(f.n);
  if (f.step_columns) {
    // Row coordinate u(col) = half - (t - x·cos)/sin, linear in col.
    const double inv_sin = 1.0 / f.sin_t;
    for (std::ptrdiff_t col = 0; col < n; ++col) {
      const double x = static_cast<double>(col) - f.half;
      const double u = f.half - (t - x * f.cos_t) * inv_sin;
      const double lower = std::floor(u);
      const auto r0 = static_cast<std::ptrdiff_t>(lower);
      if (r0 < -1 || r0 >= n) continue;
      const double frac = u - lower;
      if (r0 >= 0) visit(static_cast<std::size_t>(r0 * n + col), (1.0 - frac) * f.step_weight);
      if (r0 + 1 < n) visit(static_cast<std::size_t>((r0 + 1) * n + col), frac * f.step_weight);
    }
  } else {
    // Column coordinate v(row) = (t - y·sin)/cos + half.
    const double inv_cos = 1.0 / f.cos_t;
    for (std::ptrdiff_t row = 0; row < n; ++row) {
      const double y = f.half - static_cast<double>(row);
      const double v = (t - y * f.sin_t) * inv_cos + f.half;
      const double lower = std::floor(v);
      const auto c0 = static_cast<std::ptrdiff_t>(lower);
      if (c0 < -1 || c0 >= n) continue;
      const double frac = v - lower;
      if (c0 >= 0) visit(static_cast<std::size_t>(row * n + c0), (1.0 - frac) * f.step_weight);
      if (c0 + 1 < n) visit(static_cast<std::size_t>(row * n + c0 + 1), frac * f.step_weight);
    }
  }
}

}  // namespace

void forward_project(std::span<const double> image, std::span<double> sino,
                     const ProjectionGeometry& geom) {
  if (image.size() != geom.pixel_count() || sino.size() != geom.ray_count()) {
    throw InvalidInput("forward_project: buffer sizes do not match geometry");
  }
  const std::size_t n_det = geom.n_detectors();
  for (std::size_t a = 0; a < geom.n_angles(); ++a) {
    const AngleFrame frame(geom.image_size(), geom.angles()[a]);
    for (std::size_t d = 0; d < n_det; ++d) {
      double acc = 0.0;
      trace_ray(frame, geom.detector_position(d),
                [&](std::size_t j, double w) { acc += w * image[j]; });
      sino[a * n_det + d] = acc;
    }
  }
}

void back_project(std::span<const double> sino, std::span<double> image,
                  const ProjectionGeometry& geom) {
  if (image.size() != geom.pixel_count() || sino.size() != geom.ray_count()) {
    throw InvalidInput("back_project: buffer sizes do not match geometry");
  }
  std::fill(image.begin(), image.end(), 0.0);
  const std::size_t n_det = geom.n_detectors();
  for (std::size_t a = 0; a < geom.n_angles(); ++a) {
    const AngleFrame frame(geom.image_size(), geom.angles()[a]);
    for (std::size_t d = 0; d < n_det; ++d) {
      const double value = sino[a * n_det + d];
      if (value == 0.0) continue;
      trace_ray(frame, geom.detector_position(d),
                [&](std::size_t j, double w) { image[j] += w * value; });
    }
  }
}

Sinogram forward_project(const Image& image, const ProjectionGeometry& geom) {
  geom.require_image(image);
  const auto x = to_double(image.values());
  std::vector<double> q(geom.ray_count());
  forward_project(x, q, geom);
  Sinogram out = geom.make_sinogram();
  store_float(q, out.values());
  return out;
}

Image back_project(const Sinogram& sino, const ProjectionGeometry& geom) {
  geom.require_sinogram(sino);
  const auto p = to_double(sino.values());
  std::vector<double> x(geom.pixel_count());
  back_project(p, x, geom);
  Image out = geom.make_image();
  store_float(x, out.values());
  return out;
}

namespace {

std::vector<double> guarded_inverse(std::vector<double> sums) {
  for (double& s : sums) s = s > 0.0 ? 1.0 / s : 0.0;
  return sums;
}

}  // namespace

std::vector<float> inverse_row_sums(const ProjectionGeometry& geom) {
  const std::vector<double> ones(geom.pixel_count(), 1.0);
  std::vector<double> sums(geom.ray_count());
  forward_project(ones, sums, geom);
  const auto inv = guarded_inverse(std::move(sums));
  return {inv.begin(), inv.end()};
}

Image inverse_col_sums(const ProjectionGeometry& geom) {
  const std::vector<double> ones(geom.ray_count(), 1.0);
  std::vector<double> sums(geom.pixel_count());
  back_project(ones, sums, geom);
  const auto inv = guarded_inverse(std::move(sums));
  Image out = geom.make_image();
  store_float(inv, out.values());
  return out;
}

}  // namespace sirtnet
