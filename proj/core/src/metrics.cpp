#include "sirtnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "sirtnet/error.hpp"

namespace sirtnet {

double mse(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw InvalidInput("mse: size mismatch");
  if (a.empty()) throw InvalidInput("mse: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double mse(const Image& a, const Image& b) {
  if (a.size() != b.size()) throw InvalidInput("mse: image size mismatch");
  return mse(a.values(), b.values());
}

double mse(const Sinogram& a, const Sinogram& b) {
  if (a.n_angles() != b.n_angles() || a.n_detectors() != b.n_detectors()) {
    throw InvalidInput("mse: sinogram shape mismatch");
  }
  return mse(a.values(), b.values());
}

double psnr_from_mse(double mse_value, double data_range) {
  if (!(data_range > 0.0)) throw InvalidInput("psnr: data_range must be positive");
  if (!(mse_value >= 0.0)) throw InvalidInput("psnr: mse must be non-negative");
  if (mse_value == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(data_range * data_range / mse_value);
}

double psnr(const Image& a, const Image& b, double data_range) {
  return psnr_from_mse(mse(a, b), data_range);
}

double psnr(const Sinogram& a, const Sinogram& b, double data_range) {
  return psnr_from_mse(mse(a, b), data_range);
}

bool is_perfect_psnr(double psnr_db) noexcept { return std::isinf(psnr_db) && psnr_db > 0; }

namespace {

std::vector<double> gaussian_window(std::size_t length, double sigma) {
  std::vector<double> w(length);
  const double center = 0.5 * static_cast<double>(length - 1);
  double total = 0.0;
  for (std::size_t i = 0; i < length; ++i) {
    const double d = static_cast<double>(i) - center;
    w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

std::size_t window_length(std::size_t extent) {
  std::size_t len = std::min<std::size_t>(11, extent);
  if (len % 2 == 0) --len;
  return len;
}

// Separable 'valid' Gaussian filtering of a rows×cols array.
std::vector<double> filter_valid(const std::vector<double>& in, std::size_t rows, std::size_t cols,
                                 const std::vector<double>& wr, const std::vector<double>& wc) {
  const std::size_t out_cols = cols - wc.size() + 1;
  const std::size_t out_rows = rows - wr.size() + 1;
  std::vector<double> tmp(rows * out_cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < out_cols; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < wc.size(); ++k) acc += wc[k] * in[r * cols + c + k];
      tmp[r * out_cols + c] = acc;
    }
  }
  std::vector<double> out(out_rows * out_cols, 0.0);
  for (std::size_t r = 0; r < out_rows; ++r) {
    for (std::size_t c = 0; c < out_cols; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < wr.size(); ++k) acc += wr[k] * tmp[(r + k) * out_cols + c];
      out[r * out_cols + c] = acc;
    }
  }
  return out;
}

}  // namespace

double ssim(std::span<const float> a, std::span<const float> b, std::size_t rows,
            std::size_t cols, double data_range) {
  if (a.size() != b.size() || a.size() != rows * cols) throw InvalidInput("ssim: shape mismatch");
  if (rows == 0 || cols == 0) throw InvalidInput("ssim: empty input");
  if (!(data_range > 0.0)) throw InvalidInput("ssim: data_range must be positive");

  constexpr double sigma = 1.5;
  const auto wr = gaussian_window(window_length(rows), sigma);
  const auto wc = gaussian_window(window_length(cols), sigma);

  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mu_x = filter_valid(x, rows, cols, wr, wc);
  const auto mu_y = filter_valid(y, rows, cols, wr, wc);
  const auto e_xx = filter_valid(xx, rows, cols, wr, wc);
  const auto e_yy = filter_valid(yy, rows, cols, wr, wc);
  const auto e_xy = filter_valid(xy, rows, cols, wr, wc);

  const double c1 = (0.01 * data_range) * (0.01 * data_range);
  const double c2 = (0.03 * data_range) * (0.03 * data_range);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_x.size(); ++i) {
    const double mx = mu_x[i];
    const double my = mu_y[i];
    const double vx = e_xx[i] - mx * mx;
    const double vy = e_yy[i] - my * my;
    const double cov = e_xy[i] - mx * my;
    total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
             ((mx * mx + my * my + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mu_x.size());
}

double ssim(const Image& a, const Image& b, double data_range) {
  if (a.size() != b.size()) throw InvalidInput("ssim: image size mismatch");
  return ssim(a.values(), b.values(), a.size(), a.size(), data_range);
}

double ssim(const Sinogram& a, const Sinogram& b, double data_range) {
  if (a.n_angles() != b.n_angles() || a.n_detectors() != b.n_detectors()) {
    throw InvalidInput("ssim: sinogram shape mismatch");
  }
  return ssim(a.values(), b.values(), a.n_angles(), a.n_detectors(), data_range);
}

std::string to_string(MetricSpace space) {
  return space == MetricSpace::image ? "image" : "sinogram";
}

MetricSpace metric_space_from_string(const std::string& s) {
  if (s == "image") return MetricSpace::image;
  if (s == "sinogram") return MetricSpace::sinogram;
  throw InvalidInput("unknown metric space '" + s + "'");
}

MetricEntry image_metrics(const std::string& method, const std::string& sample_id,
                          const Image& recon, const Image& truth, double data_range) {
  MetricEntry e;
  e.method = method;
  e.space = MetricSpace::image;
  e.sample_id = sample_id;
  e.mse = mse(recon, truth);
  e.psnr_db = psnr_from_mse(e.mse, data_range);
  e.ssim = ssim(recon, truth, data_range);
  return e;
}

MetricEntry sinogram_fidelity(const std::string& method, const std::string& sample_id,
                              const Image& recon, const Sinogram& measured,
                              const ProjectionGeometry& geom) {
  geom.require_sinogram(measured);
  const Sinogram reprojected = forward_project(recon, geom);
  const auto [lo, hi] = std::minmax_element(measured.values().begin(), measured.values().end());
  double range = static_cast<double>(*hi) - static_cast<double>(*lo);
  if (!(range > 0.0)) range = 1.0;

  MetricEntry e;
  e.method = method;
  e.space = MetricSpace::sinogram;
  e.sample_id = sample_id;
  e.mse = mse(reprojected, measured);
  e.psnr_db = psnr_from_mse(e.mse, range);
  e.ssim = ssim(reprojected, measured, range);
  return e;
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw InvalidInput("mean_std: empty input");
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  if (!std::isfinite(mean)) return {mean, 0.0};
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

std::vector<MetricSummary> aggregate_report(std::span<const MetricEntry> entries) {
  if (entries.empty()) throw InvalidInput("aggregate_report: no entries");
  std::vector<std::pair<std::string, MetricSpace>> keys;
  std::map<std::pair<std::string, int>, std::vector<const MetricEntry*>> groups;
  for (const auto& e : entries) {
    const auto key = std::make_pair(e.method, static_cast<int>(e.space));
    if (!groups.contains(key)) keys.emplace_back(e.method, e.space);
    groups[key].push_back(&e);
  }
  std::vector<MetricSummary> out;
  for (const auto& [method, space] : keys) {
    const auto& group = groups.at({method, static_cast<int>(space)});
    std::vector<double> p, m, s;
    for (const auto* e : group) {
      p.push_back(e->psnr_db);
      m.push_back(e->mse);
      s.push_back(e->ssim);
    }
    MetricSummary summary;
    summary.method = method;
    summary.space = space;
    summary.count = group.size();
    summary.psnr_db = mean_std(p);
    summary.mse = mean_std(m);
    summary.mse_variance = summary.mse.std * summary.mse.std;
    summary.ssim = mean_std(s);
    out.push_back(summary);
  }
  return out;
}

namespace {

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

std::string format_csv(std::span<const MetricEntry> entries) {
  std::ostringstream os;
  os << "method,space,sample_id,psnr_db,mse,ssim\n";
  for (const auto& e : entries) {
    os << e.method << ',' << to_string(e.space) << ',' << e.sample_id << ','
       << format_number(e.psnr_db) << ',' << format_number(e.mse) << ',' << format_number(e.ssim)
       << '\n';
  }
  return os.str();
}

std::vector<MetricEntry> parse_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "method,space,sample_id,psnr_db,mse,ssim") {
    throw InvalidInput("metrics CSV: missing or unexpected header");
  }
  std::vector<MetricEntry> out;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 6) {
      throw InvalidInput("metrics CSV line " + std::to_string(line_no) + ": expected 6 fields");
    }
    MetricEntry e;
    e.method = f[0];
    e.space = metric_space_from_string(f[1]);
    e.sample_id = f[2];
    try {
      e.psnr_db = std::stod(f[3]);
      e.mse = std::stod(f[4]);
      e.ssim = std::stod(f[5]);
    } catch (const std::exception&) {
      throw InvalidInput("metrics CSV line " + std::to_string(line_no) + ": bad number");
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::string format_table(std::span<const MetricSummary> summaries) {
  std::size_t name_width = 6;
  for (const auto& s : summaries) name_width = std::max(name_width, s.method.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(name_width)) << "method" << std::right
     << " | space    |" << std::setw(10) << "PSNR mean" << std::setw(8) << "std" << " |"
     << std::setw(11) << "MSE mean" << std::setw(10) << "std" << std::setw(10) << "var" << " |"
     << std::setw(10) << "SSIM mean" << std::setw(10) << "std" << '\n';
  for (const auto& s : summaries) {
    os << std::left << std::setw(static_cast<int>(name_width)) << s.method << " | "
       << std::setw(8) << to_string(s.space) << " |" << std::right << std::fixed
       << std::setprecision(2) << std::setw(8) << s.psnr_db.mean << std::setw(8) << s.psnr_db.std
       << " |" << std::scientific << std::setprecision(2) << std::setw(11) << s.mse.mean
       << std::setw(10) << s.mse.std << std::setw(10) << s.mse_variance << " |" << std::fixed
       << std::setprecision(4) << std::setw(8) << s.ssim.mean << std::scientific
       << std::setprecision(1) << std::setw(10) << s.ssim.std << '\n';
    os << std::defaultfloat;
  }
  return os.str();
}

std::string format_summary_csv(std::span<const MetricSummary> summaries) {
  std::ostringstream os;
  os << "method,space,count,psnr_mean,psnr_std,mse_mean,mse_std,mse_var,ssim_mean,ssim_std\n";
  for (const auto& s : summaries) {
    os << s.method << ',' << to_string(s.space) << ',' << s.count << ','
       << format_number(s.psnr_db.mean) << ',' << format_number(s.psnr_db.std) << ','
       << format_number(s.mse.mean) << ',' << format_number(s.mse.std) << ','
       << format_number(s.mse_variance) << ',' << format_number(s.ssim.mean) << ','
       << format_number(s.ssim.std) << '\n';
  }
  return os.str();
}

}  // namespace sirtnet
