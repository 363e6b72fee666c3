#include "sirtnet/solvers.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <numeric>

#include "sirtnet/error.hpp"

namespace sirtnet {

std::shared_ptr<const SirtWeights> SirtWeights::compute(const ProjectionGeometry& geom) {
  auto w = std::make_shared<SirtWeights>();
  const auto r = inverse_row_sums(geom);
  const auto c = inverse_col_sums(geom);
  w->row.assign(r.begin(), r.end());
  w->col.assign(c.values().begin(), c.values().end());
  return w;
}

SirtState::SirtState(ProjectionGeometry geom, Sinogram target, Image x0,
                     std::shared_ptr<const SirtWeights> weights)
    : geom_(std::move(geom)), p_(std::move(target)), x_(std::move(x0)), weights_(std::move(weights)) {
  geom_.require_image(x_);
  geom_.require_sinogram(p_);
  if (!weights_) {
    weights_ = SirtWeights::compute(geom_);
  } else if (weights_->row.size() != geom_.ray_count() ||
             weights_->col.size() != geom_.pixel_count()) {
    throw InvalidInput("SirtState: cached weights do not match the geometry");
  }
}

void SirtState::advance() {
  const auto& R = weights_->row;
  const auto& C = weights_->col;
  std::vector<double> x = to_double(x_.values());
  std::vector<double> residual(geom_.ray_count());
  forward_project(x, residual, geom_);
  const auto p = p_.values();
  for (std::size_t i = 0; i < residual.size(); ++i) {
    residual[i] = R[i] * (static_cast<double>(p[i]) - residual[i]);
  }
  std::vector<double> correction(geom_.pixel_count());
  back_project(residual, correction, geom_);
  for (std::size_t j = 0; j < x.size(); ++j) x[j] += C[j] * correction[j];
  store_float(x, x_.values());
  ++k_;
}

double SirtState::weighted_residual() const {
  std::vector<double> q(geom_.ray_count());
  forward_project(to_double(x_.values()), q, geom_);
  const auto p = p_.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double diff = q[i] - static_cast<double>(p[i]);
    acc += weights_->row[i] * diff * diff;
  }
  return acc;
}

SirtState sirt_step(SirtState state) {
  state.advance();
  return state;
}

Image sirt_run(const Image& x0, const Sinogram& p, const ProjectionGeometry& geom,
               std::size_t n_iters, std::shared_ptr<const SirtWeights> weights) {
  if (n_iters == 0) {
    geom.require_image(x0);
    geom.require_sinogram(p);
    return x0;
  }
  SirtState state(geom, p, x0, std::move(weights));
  for (std::size_t k = 0; k < n_iters; ++k) state.advance();
  return state.x();
}

double weighted_residual(const Image& x, const Sinogram& p, const ProjectionGeometry& geom) {
  return SirtState(geom, p, x).weighted_residual();
}

namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

std::size_t next_pow2(std::size_t v) {
  std::size_t p = 1;
  while (p < v) p <<= 1;
  return p;
}

// Frequency response of the discrete Ram-Lak kernel (h[0] = 1/(4τ²),
// h[odd k] = -1/(π²k²τ²)), times τ for the convolution quadrature and 2 so
// that the backprojection scale is π/(2·n_angles).
std::vector<double> ramlak_response(std::size_t padded, double spacing) {
  std::vector<double> kernel(padded, 0.0);
  kernel[0] = 1.0 / (4.0 * spacing * spacing);
  for (std::size_t k = 1; k <= padded / 2; ++k) {
    if (k % 2 == 1) {
      const double v = -1.0 / (std::numbers::pi * std::numbers::pi * static_cast<double>(k * k) *
                               spacing * spacing);
      kernel[k] = v;
      kernel[padded - k] = v;
    }
  }
  const std::size_t bins = padded / 2 + 1;
  std::vector<std::complex<double>> spectrum(bins);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(padded), kernel.data(),
                                          reinterpret_cast<fftw_complex*>(spectrum.data()),
                                          FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }
  std::vector<double> response(bins);
  for (std::size_t k = 0; k < bins; ++k) response[k] = 2.0 * spacing * spectrum[k].real();
  return response;
}

}  // namespace

Sinogram ramp_filter(const Sinogram& p, const ProjectionGeometry& geom) {
  geom.require_sinogram(p);
  const std::size_t n_det = geom.n_detectors();
  const std::size_t padded = next_pow2(2 * n_det);
  const std::size_t bins = padded / 2 + 1;
  const auto response = ramlak_response(padded, geom.detector_spacing());

  std::vector<double> row(padded);
  std::vector<std::complex<double>> spectrum(bins);
  fftw_plan forward;
  fftw_plan inverse;
  {
    std::lock_guard lock(fftw_planner_mutex());
    forward = fftw_plan_dft_r2c_1d(static_cast<int>(padded), row.data(),
                                   reinterpret_cast<fftw_complex*>(spectrum.data()),
                                   FFTW_ESTIMATE);
    inverse = fftw_plan_dft_c2r_1d(static_cast<int>(padded),
                                   reinterpret_cast<fftw_complex*>(spectrum.data()), row.data(),
                                   FFTW_ESTIMATE);
  }

  Sinogram out = geom.make_sinogram();
  for (std::size_t a = 0; a < geom.n_angles(); ++a) {
    std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t d = 0; d < n_det; ++d) row[d] = p(a, d);
    fftw_execute(forward);
    for (std::size_t k = 0; k < bins; ++k) spectrum[k] *= response[k];
    fftw_execute(inverse);
    for (std::size_t d = 0; d < n_det; ++d) {
      out(a, d) = static_cast<float>(row[d] / static_cast<double>(padded));
    }
  }

  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(inverse);
  }
  return out;
}

Image fbp(const Sinogram& p, const ProjectionGeometry& geom) {
  const Sinogram filtered = ramp_filter(p, geom);
  std::vector<double> x(geom.pixel_count());
  back_project(to_double(filtered.values()), x, geom);
  const double scale =
      std::numbers::pi / (2.0 * static_cast<double>(geom.n_angles())) * geom.detector_spacing();
  for (double& v : x) v *= scale;
  Image out = geom.make_image();
  store_float(x, out.values());
  return out;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

Image cgls(const Sinogram& p, const ProjectionGeometry& geom, std::size_t n_iters,
           CglsTrace* trace) {
  geom.require_sinogram(p);
  if (n_iters == 0) throw InvalidInput("cgls: n_iters must be at least 1");

  std::vector<double> x(geom.pixel_count(), 0.0);
  std::vector<double> r = to_double(p.values());
  std::vector<double> s(geom.pixel_count());
  back_project(r, s, geom);
  std::vector<double> d = s;
  std::vector<double> q(geom.ray_count());
  double gamma = dot(s, s);

  if (trace) {
    *trace = CglsTrace{};
    trace->residual_norms.push_back(std::sqrt(dot(r, r)));
  }

  for (std::size_t it = 0; it < n_iters; ++it) {
    if (std::sqrt(dot(d, d)) < 1e-12) {
      if (trace) trace->stagnated = true;
      break;
    }
    forward_project(d, q, geom);
    const double qq = dot(q, q);
    if (qq <= 0.0) {
      if (trace) trace->stagnated = true;
      break;
    }
    const double alpha = gamma / qq;
    for (std::size_t j = 0; j < x.size(); ++j) x[j] += alpha * d[j];
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= alpha * q[i];
    back_project(r, s, geom);
    const double gamma_next = dot(s, s);
    const double beta = gamma_next / gamma;
    gamma = gamma_next;
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = s[j] + beta * d[j];
    if (trace) {
      trace->residual_norms.push_back(std::sqrt(dot(r, r)));
      trace->iterations = it + 1;
    }
  }

  Image out = geom.make_image();
  store_float(x, out.values());
  return out;
}

}  // namespace sirtnet
