#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sirtnet/geometry.hpp"
#include "sirtnet/image.hpp"

namespace sirtnet {

double mse(std::span<const float> a, std::span<const float> b);
double mse(const Image& a, const Image& b);
double mse(const Sinogram& a, const Sinogram& b);

/// 10·log10(range² / mse). Identical inputs give +infinity, see is_perfect_psnr.
double psnr_from_mse(double mse_value, double data_range = 1.0);
double psnr(const Image& a, const Image& b, double data_range = 1.0);
double psnr(const Sinogram& a, const Sinogram& b, double data_range);
bool is_perfect_psnr(double psnr_db) noexcept;

/// Mean local SSIM over a rows×cols array: Gaussian window 11×11, σ = 1.5,
/// C1 = (0.01·L)², C2 = (0.03·L)², windows fully inside the array. Arrays
/// smaller than 11 along an axis use the largest odd window that fits.
double ssim(std::span<const float> a, std::span<const float> b, std::size_t rows,
            std::size_t cols, double data_range = 1.0);
double ssim(const Image& a, const Image& b, double data_range = 1.0);
double ssim(const Sinogram& a, const Sinogram& b, double data_range);

enum class MetricSpace { image, sinogram };
std::string to_string(MetricSpace space);
MetricSpace metric_space_from_string(const std::string& s);

struct MetricEntry {
  std::string method;
  MetricSpace space = MetricSpace::image;
  std::string sample_id;
  double psnr_db = 0.0;
  double mse = 0.0;
  double ssim = 0.0;

  friend bool operator==(const MetricEntry&, const MetricEntry&) = default;
};

MetricEntry image_metrics(const std::string& method, const std::string& sample_id,
                          const Image& recon, const Image& truth, double data_range = 1.0);

/// Re-projects `recon` and compares it with the measured sinogram, using
/// data_range = max(p) - min(p).
MetricEntry sinogram_fidelity(const std::string& method, const std::string& sample_id,
                              const Image& recon, const Sinogram& measured,
                              const ProjectionGeometry& geom);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population convention
};

MeanStd mean_std(std::span<const double> values);

struct MetricSummary {
  std::string method;
  MetricSpace space = MetricSpace::image;
  std::size_t count = 0;
  MeanStd psnr_db;
  MeanStd mse;
  double mse_variance = 0.0;
  MeanStd ssim;
};

/// One summary per (method, space), ordered by first appearance.
std::vector<MetricSummary> aggregate_report(std::span<const MetricEntry> entries);

/// CSV with header method,space,sample_id,psnr_db,mse,ssim.
std::string format_csv(std::span<const MetricEntry> entries);
std::vector<MetricEntry> parse_csv(const std::string& text);

/// Aligned text table: method, space, PSNR mean/std, MSE mean/std/variance, SSIM mean/std.
std::string format_table(std::span<const MetricSummary> summaries);
std::string format_summary_csv(std::span<const MetricSummary> summaries);

}  // namespace sirtnet
