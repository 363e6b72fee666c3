#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sirtnet/geometry.hpp"
#include "sirtnet/image.hpp"

namespace sirtnet {

// ---------------------------------------------------------------- phantoms

/// Ellipse in the unit field of view ([-1, 1]² mapped onto the image grid,
/// y pointing up). `angle` rotates the semi-axes counter-clockwise.
struct Ellipse {
  double center_x = 0.0;
  double center_y = 0.0;
  double semi_axis_x = 0.5;
  double semi_axis_y = 0.5;
  double angle = 0.0;
  double intensity = 1.0;
};

struct EllipsePhantomSpec {
  std::size_t min_ellipses = 3;  // in addition to the body ellipse
  std::size_t max_ellipses = 8;
  bool body = true;  // one large ellipse drawn first
  double body_min_axis = 0.6;
  double body_max_axis = 0.9;
  double body_min_intensity = 0.2;
  double body_max_intensity = 0.5;
  double min_axis = 0.04;
  double max_axis = 0.35;
  double min_intensity = -0.3;
  double max_intensity = 0.6;
};

void to_json(nlohmann::json& j, const EllipsePhantomSpec& spec);
EllipsePhantomSpec phantom_spec_from_json(const nlohmann::json& j);

/// Additive ellipses on a zero background, clamped to [0, 1], each pixel
/// averaged over 4×4 sub-samples.
Image render_phantom(std::span<const Ellipse> ellipses, std::size_t size);

/// Random ellipse set, every ellipse fully inside the unit circle.
std::vector<Ellipse> random_ellipses(const EllipsePhantomSpec& spec, std::uint64_t seed);

std::vector<Image> generate_phantoms(const EllipsePhantomSpec& spec, std::size_t count,
                                     std::size_t size, std::uint64_t seed);

// ------------------------------------------------------------ acquisition

/// Noise-free low-dose acquisition (forward projection on the sparse-view
/// geometry, 20 angles by default).
Sinogram simulate_low_dose(const Image& image, const ProjectionGeometry& geom);

struct NoiseModel {
  double incident_intensity = 1e4;  // I0
  double attenuation_scale = 1.0;   // μ_scale, see attenuation_scale_for
  std::uint64_t seed = 0;
};

/// μ_scale such that max(p)·μ_scale equals `max_attenuation` over the set.
double attenuation_scale_for(std::span<const Sinogram> sinograms, double max_attenuation = 4.0);

/// Beer-Lambert photon counts c ~ Poisson(I0·exp(-p·μ)), returned as line
/// integrals -ln(max(c, 1)/I0)/μ. Negative inputs are clamped to 0; the number
/// clamped is reported through `clamped` when given.
Sinogram apply_poisson_noise(const Sinogram& sino, const NoiseModel& model,
                             std::size_t* clamped = nullptr);

// ---------------------------------------------------------------- file I/O

/// Raw little-endian float32 at `path`, JSON sidecar at `path` + ".json".
void write_image(const std::filesystem::path& path, const Image& image);
Image read_image(const std::filesystem::path& path);
void write_sinogram(const std::filesystem::path& path, const Sinogram& sino);
Sinogram read_sinogram(const std::filesystem::path& path);

/// 16-bit binary PGM; values in [lo, hi] map linearly onto [0, 65535].
void write_pgm16(const std::filesystem::path& path, const Image& image, float lo = 0.0f,
                 float hi = 1.0f);
/// Binary PGM (8 or 16 bit) scaled to [0, 1] and bilinearly resampled to size×size.
Image import_pgm(const std::filesystem::path& path, std::size_t size);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// ---------------------------------------------------------------- datasets

/// x_normalized = (x - offset) / scale.
struct Normalization {
  double offset = 0.0;
  double scale = 1.0;

  double apply(double v) const { return (v - offset) / scale; }
  double invert(double v) const { return v * scale + offset; }
};

/// Identity when every value is already in [0, 1], global min-max otherwise.
Normalization fit_normalization(std::span<const Image> images);
Image normalize(const Image& image, const Normalization& norm);
Image denormalize(const Image& image, const Normalization& norm);

struct ManifestEntry {
  std::string id;
  std::string image;     // relative to the manifest directory
  std::string sinogram;  // relative to the manifest directory
};

struct DatasetManifest {
  std::filesystem::path root;  // directory holding manifest.json
  ProjectionGeometry geometry = ProjectionGeometry::parallel(1, 1);
  Normalization normalization;
  double attenuation_scale = 1.0;
  std::optional<double> incident_intensity;  // set when sinograms carry noise
  std::uint64_t split_seed = 0;
  double train_ratio = 0.8;
  std::vector<ManifestEntry> train;
  std::vector<ManifestEntry> validation;
  std::vector<ManifestEntry> test;
};

nlohmann::json manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const nlohmann::json& j, const std::filesystem::path& root);

/// Normalizes, simulates, splits `images` train/validation by `train_ratio`
/// (seeded) and keeps `test_images` as a separate held-out list. Writes all
/// files plus manifest.json under `dir`.
DatasetManifest build_dataset(std::span<const Image> images, std::span<const Image> test_images,
                              const ProjectionGeometry& geom,
                              const std::optional<NoiseModel>& noise, std::uint64_t split_seed,
                              double train_ratio, const std::filesystem::path& dir);

/// Reads manifest.json and checks every referenced file exists with the
/// declared shape.
DatasetManifest load_manifest(const std::filesystem::path& manifest_path);

struct Sample {
  std::string id;
  Image truth;
  Sinogram sinogram;
};

enum class Split { train, validation, test };
std::vector<Sample> load_samples(const DatasetManifest& manifest, Split split);

/// Splits [0, count) into a seeded train/validation partition.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t count,
                                                                            double train_ratio,
                                                                            std::uint64_t seed);

}  // namespace sirtnet
