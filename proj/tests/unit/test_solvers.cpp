#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "sirtnet/dataio.hpp"
#include "sirtnet/error.hpp"
#include "sirtnet/metrics.hpp"
#include "sirtnet/solvers.hpp"

using namespace sirtnet;

namespace {

Image random_image(std::size_t n, std::uint64_t seed, float lo = 0.0f, float hi = 1.0f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  Image img(n);
  for (float& v : img.values()) v = u(rng);
  return img;
}

// Modified Shepp-Logan head in the unit field of view.
Image shepp_logan(std::size_t n) {
  const double deg = std::numbers::pi / 180.0;
  const std::vector<Ellipse> e = {
      {0.0, 0.0, 0.69, 0.92, 0.0, 1.0},          {0.0, -0.0184, 0.6624, 0.874, 0.0, -0.8},
      {0.22, 0.0, 0.11, 0.31, -18 * deg, -0.2},  {-0.22, 0.0, 0.16, 0.41, 18 * deg, -0.2},
      {0.0, 0.35, 0.21, 0.25, 0.0, 0.1},         {0.0, 0.1, 0.046, 0.046, 0.0, 0.1},
      {0.0, -0.1, 0.046, 0.046, 0.0, 0.1},       {-0.08, -0.605, 0.046, 0.023, 0.0, 0.1},
      {0.0, -0.606, 0.023, 0.023, 0.0, 0.1},     {0.06, -0.605, 0.023, 0.046, 0.0, 0.1}};
  return render_phantom(e, n);
}

std::vector<double> dense_sirt_step(const oracle::DenseMatrix& W, std::span<const double> x,
                                    std::span<const double> p) {
  std::vector<double> row(W.rows, 0.0), col(W.cols, 0.0);
  for (std::size_t i = 0; i < W.rows; ++i) {
    for (std::size_t j = 0; j < W.cols; ++j) {
      row[i] += W(i, j);
      col[j] += W(i, j);
    }
  }
  auto wx = W.apply(x);
  std::vector<double> rr(W.rows);
  for (std::size_t i = 0; i < W.rows; ++i) rr[i] = (row[i] > 0 ? 1.0 / row[i] : 0.0) * (p[i] - wx[i]);
  auto bt = W.apply_transpose(rr);
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t j = 0; j < W.cols; ++j) out[j] += (col[j] > 0 ? 1.0 / col[j] : 0.0) * bt[j];
  return out;
}

double norm(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

}  // namespace

TEST(Sirt, ZeroIsAFixedPoint) {
  const auto g = ProjectionGeometry::parallel(8, 6);
  SirtState s(g, g.make_sinogram(), g.make_image());
  s = sirt_step(std::move(s));
  EXPECT_EQ(s.iteration(), 1u);
  for (float v : s.x().values()) EXPECT_EQ(v, 0.0f);
}

TEST(Sirt, FirstStepMatchesDenseArithmetic) {
  const auto g = ProjectionGeometry::parallel(8, 10);
  const auto W = oracle::projection_matrix(g);
  const Sinogram p = forward_project(random_image(8, 1), g);
  const auto expected = dense_sirt_step(W, std::vector<double>(64, 0.0), to_double(p.values()));
  const Image x1 = sirt_run(g.make_image(), p, g, 1);
  for (std::size_t j = 0; j < 64; ++j) EXPECT_NEAR(x1.values()[j], expected[j], 1e-5);

  // A second step from a nonzero iterate.
  const auto expected2 = dense_sirt_step(W, to_double(x1.values()), to_double(p.values()));
  const Image x2 = sirt_run(x1, p, g, 1);
  for (std::size_t j = 0; j < 64; ++j) EXPECT_NEAR(x2.values()[j], expected2[j], 1e-5);
}

TEST(Sirt, RunZeroIterationsIsIdentity) {
  const auto g = ProjectionGeometry::parallel(8, 6);
  const Image x0 = random_image(8, 4);
  EXPECT_EQ(sirt_run(x0, forward_project(random_image(8, 5), g), g, 0), x0);
}

TEST(Sirt, RunOneIterationEqualsStep) {
  const auto g = ProjectionGeometry::parallel(8, 6);
  const Sinogram p = forward_project(random_image(8, 6), g);
  const SirtState s = sirt_step(SirtState(g, p, g.make_image()));
  EXPECT_EQ(sirt_run(g.make_image(), p, g, 1), s.x());
}

TEST(Sirt, WeightedResidualMonotoneAndConverges) {
  const std::size_t n = 32;
  const auto g = ProjectionGeometry::parallel(n, 32, 46);  // detector covers the diagonal
  const Sinogram p = forward_project(random_image(n, 7), g);
  SirtState s(g, p, g.make_image());
  const double initial = s.weighted_residual();
  double previous = initial;
  for (int k = 0; k < 200; ++k) {
    s.advance();
    const double now = s.weighted_residual();
    ASSERT_LE(now, previous * (1.0 + 1e-6)) << "step " << k;
    previous = now;
  }
  EXPECT_LT(previous, 1e-3 * initial);
}

TEST(Sirt, LinearInSinogramFromZero) {
  const auto g = ProjectionGeometry::parallel(16, 8);
  const Sinogram p1 = forward_project(random_image(16, 8), g);
  const Sinogram p2 = forward_project(random_image(16, 9), g);
  Sinogram mix = g.make_sinogram();
  for (std::size_t i = 0; i < mix.ray_count(); ++i) {
    mix.values()[i] = 0.7f * p1.values()[i] - 1.3f * p2.values()[i];
  }
  const Image a = sirt_run(g.make_image(), p1, g, 15);
  const Image b = sirt_run(g.make_image(), p2, g, 15);
  const Image m = sirt_run(g.make_image(), mix, g, 15);
  Image combo(16);
  double diff = 0.0;
  for (std::size_t j = 0; j < combo.pixel_count(); ++j) {
    combo.values()[j] = 0.7f * a.values()[j] - 1.3f * b.values()[j];
    diff += std::pow(static_cast<double>(combo.values()[j]) - m.values()[j], 2);
  }
  EXPECT_LT(std::sqrt(diff) / norm(m.values()), 1e-4);
}

TEST(Sirt, WeightedResidualDefinition) {
  const auto g = ProjectionGeometry::parallel(8, 10);
  const Image x = random_image(8, 10);
  const Sinogram p = forward_project(x, g);
  EXPECT_NEAR(weighted_residual(x, p, g), 0.0, 1e-10);

  const auto r = inverse_row_sums(g);
  double expected = 0.0;
  for (std::size_t i = 0; i < p.ray_count(); ++i) {
    expected += r[i] * static_cast<double>(p.values()[i]) * p.values()[i];
  }
  EXPECT_NEAR(weighted_residual(g.make_image(), p, g), expected, 1e-6 * expected);

  // Against dense arithmetic for an inconsistent pair.
  const auto W = oracle::projection_matrix(g);
  const Image y = random_image(8, 11);
  const auto wy = W.apply(to_double(y.values()));
  double dense = 0.0;
  for (std::size_t i = 0; i < W.rows; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < W.cols; ++j) row += W(i, j);
    dense += (row > 0 ? 1.0 / row : 0.0) * std::pow(wy[i] - p.values()[i], 2);
  }
  EXPECT_NEAR(weighted_residual(y, p, g), dense, 1e-6 * dense);
}

TEST(Sirt, StateRejectsMismatchedShapes) {
  const auto g = ProjectionGeometry::parallel(8, 6);
  EXPECT_THROW(SirtState(g, Sinogram(6, 9), g.make_image()), InvalidInput);
  EXPECT_THROW(SirtState(g, g.make_sinogram(), Image(7)), InvalidInput);
}

TEST(Cgls, ZeroSinogramGivesZero) {
  const auto g = ProjectionGeometry::parallel(8, 6);
  CglsTrace trace;
  const Image x = cgls(g.make_sinogram(), g, 5, &trace);
  for (float v : x.values()) EXPECT_EQ(v, 0.0f);
  EXPECT_TRUE(trace.stagnated);
  EXPECT_THROW(cgls(g.make_sinogram(), g, 0), InvalidInput);
}

TEST(Cgls, SolvesConsistentSystem) {
  const auto g = ProjectionGeometry::parallel(8, 10);
  const Image truth = random_image(8, 12);
  const Sinogram p = forward_project(truth, g);
  CglsTrace trace;
  const Image x = cgls(p, g, 64, &trace);

  // Residual measured with the dense oracle, not the library operator.
  const auto W = oracle::projection_matrix(g);
  const auto wx = W.apply(to_double(x.values()));
  double res = 0.0, pn = 0.0;
  for (std::size_t i = 0; i < W.rows; ++i) {
    res += std::pow(wx[i] - p.values()[i], 2);
    pn += std::pow(p.values()[i], 2);
  }
  EXPECT_LT(std::sqrt(res / pn), 1e-4);
  EXPECT_LE(trace.residual_norms.size(), 65u);
}

TEST(Cgls, ResidualIsMonotone) {
  const auto g = ProjectionGeometry::parallel(24, 9);
  std::mt19937_64 rng(13);
  std::normal_distribution<float> noise(0.0f, 1.0f);
  Sinogram p = forward_project(random_image(24, 14), g);
  for (float& v : p.values()) v += noise(rng);  // inconsistent data
  CglsTrace trace;
  cgls(p, g, 40, &trace);
  ASSERT_GE(trace.residual_norms.size(), 2u);
  for (std::size_t k = 1; k < trace.residual_norms.size(); ++k) {
    EXPECT_LE(trace.residual_norms[k], trace.residual_norms[k - 1] * (1.0 + 1e-6)) << k;
  }
}

TEST(Fbp, RampFilterMatchesSpatialConvolution) {
  for (double spacing : {1.0, 0.5}) {
    const auto g = ProjectionGeometry::parallel(12, 3, 13, spacing);
    const Sinogram p = forward_project(random_image(12, 15), g);
    const Sinogram f = ramp_filter(p, g);
    auto h = [&](long k) {
      if (k == 0) return 1.0 / (4.0 * spacing * spacing);
      if (k % 2 == 0) return 0.0;
      return -1.0 / (std::numbers::pi * std::numbers::pi * double(k * k) * spacing * spacing);
    };
    for (std::size_t a = 0; a < g.n_angles(); ++a) {
      for (long d = 0; d < 13; ++d) {
        double acc = 0.0;
        for (long e = 0; e < 13; ++e) acc += h(d - e) * p(a, static_cast<std::size_t>(e));
        EXPECT_NEAR(f(a, static_cast<std::size_t>(d)), 2.0 * spacing * acc, 1e-4);
      }
    }
  }
}

TEST(Fbp, ZeroSinogramGivesZero) {
  const auto g = ProjectionGeometry::parallel(16, 8);
  const auto result_1 = fbp(g.make_sinogram(), g);
  for (float v : result_1.values()) EXPECT_EQ(v, 0.0f);
}

TEST(Fbp, DenseViewReconstruction) {
  const Image phantom = shepp_logan(64);
  const auto g = ProjectionGeometry::parallel(64, 180);
  const Image recon = fbp(forward_project(phantom, g), g);
  EXPECT_GE(psnr(recon, phantom), 25.0);
}

TEST(Fbp, SparseViewWorseThanSirt) {
  const Image phantom = shepp_logan(64);
  const auto g = ProjectionGeometry::parallel(64, 20);
  const Sinogram p = forward_project(phantom, g);
  const double fbp_db = psnr(fbp(p, g), phantom);
  const double sirt_db = psnr(sirt_run(g.make_image(), p, g, 200), phantom);
  EXPECT_LT(fbp_db, sirt_db);
}

TEST(Fbp, DenseViewsImproveSinogramFidelity) {
  const Image phantom = shepp_logan(64);
  const auto sparse = ProjectionGeometry::parallel(64, 20);
  const auto dense = ProjectionGeometry::parallel(64, 180);
  const Sinogram ps = forward_project(phantom, sparse);
  const Sinogram pd = forward_project(phantom, dense);
  const double sparse_db = sinogram_fidelity("fbp", "0", fbp(ps, sparse), ps, sparse).psnr_db;
  const double dense_db = sinogram_fidelity("fbp", "0", fbp(pd, dense), pd, dense).psnr_db;
  EXPECT_GT(dense_db, sparse_db);
}
