#include "doctest.h"

#include <Eigen/Dense>
#include <numbers>

#include "dynres/gp.hpp"
#include "dynres/util.hpp"

using namespace dynres;

namespace {

// Dense-solve oracle on standardized targets, reported in raw units.
GpPosterior eigen_posterior(const std::vector<double> &x, const std::vector<double> &y, const GpKernel &k,
                            const std::vector<double> &xt) {
  const int n = static_cast<int>(x.size());
  double mean = 0, var = 0;
  for (double v : y) mean += v;
  mean /= n;
  for (double v : y) var += (v - mean) * (v - mean);
  var /= n;
  const double sc = var > 1e-24 ? std::sqrt(var) : 1.0;
  Eigen::MatrixXd K(n, n);
  Eigen::VectorXd ys(n);
  for (int i = 0; i < n; ++i) {
    ys(i) = (y[i] - mean) / sc;
    for (int j = 0; j < n; ++j) K(i, j) = k(x[i], x[j]) + (i == j ? k.noise_sd * k.noise_sd : 0.0);
  }
  const Eigen::VectorXd alpha = K.fullPivLu().solve(ys);
  GpPosterior p;
  for (double t : xt) {
    Eigen::VectorXd ks(n);
    for (int i = 0; i < n; ++i) ks(i) = k(t, x[i]);
    const Eigen::VectorXd v = K.fullPivLu().solve(ks);
    p.mean.push_back(mean + sc * ks.dot(alpha));
    p.variance.push_back(std::max(0.0, k(t, t) - ks.dot(v)) * sc * sc);
  }
  return p;
}

}  // namespace

TEST_CASE("cholesky factors a known matrix and rejects an indefinite one") {
  std::vector<double> a{4, 2, 2, 3};
  REQUIRE(cholesky(a, 2));
  CHECK(a[0] == doctest::Approx(2.0));
  CHECK(a[2] == doctest::Approx(1.0));
  CHECK(a[3] == doctest::Approx(std::sqrt(2.0)));
  CHECK(a[1] == 0.0);
  std::vector<double> b{1, 2, 2, 1};
  CHECK_FALSE(cholesky(b, 2));
}

TEST_CASE("single-point posterior has the closed form") {
  const GpKernel k{1.5, 0.3, 0.2};
  const auto gp = gp_fit({0.4}, {7.0}, k);
  const double t = 0.55;
  const auto post = gp_posterior(gp, {t});
  // one target standardizes to 0, so the mean is the target itself
  CHECK(post.mean[0] == doctest::Approx(7.0));
  const double kx = k(t, 0.4);
  const double expected = k(t, t) - kx * kx / (k(0.4, 0.4) + 0.04);
  CHECK(post.variance[0] == doctest::Approx(expected));
}

TEST_CASE("posterior matches a dense Eigen solve on random fits") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x, y, xt;
    for (int i = 0; i < 6; ++i) {
      x.push_back(rng.uniform());
      y.push_back(rng.uniform(-3, 3));
    }
    for (int i = 0; i < 15; ++i) xt.push_back(rng.uniform(-0.2, 1.2));
    const GpKernel k{rng.uniform(0.5, 2), rng.uniform(0.1, 0.5), rng.uniform(0.05, 0.3)};
    const auto a = gp_posterior(gp_fit(x, y, k), xt);
    const auto b = eigen_posterior(x, y, k, xt);
    for (std::size_t i = 0; i < xt.size(); ++i) {
      CHECK(std::abs(a.mean[i] - b.mean[i]) < 1e-8);
      CHECK(std::abs(a.variance[i] - b.variance[i]) < 1e-8);
    }
  }
}

TEST_CASE("training-point variance is bounded by the noise level") {
  Rng rng(6);
  std::vector<double> x, y;
  for (int i = 0; i < 6; ++i) {
    x.push_back(i / 5.0);
    y.push_back(rng.uniform(-1, 1));
  }
  const GpKernel k{1.0, 0.2, 0.1};
  const auto gp = gp_fit(x, y, k);
  const auto post = gp_posterior(gp, x);
  for (double v : post.variance) CHECK(v / (gp.y_scale * gp.y_scale) <= 0.01 + 1e-8);
}

TEST_CASE("noise-free fit interpolates") {
  const std::vector<double> x{0.0, 0.2, 0.45, 0.6, 0.8, 1.0};
  const std::vector<double> y{1.0, -2.0, 0.5, 3.0, 0.0, 1.5};
  const auto post = gp_posterior(gp_fit(x, y, GpKernel{1.0, 0.2, 0.0}), x);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(post.mean[i] - y[i]) < 1e-6);
}

TEST_CASE("posterior does not depend on the order of training points") {
  const std::vector<double> x{0.1, 0.5, 0.9, 0.3}, y{1, 3, 2, 0};
  const std::vector<double> xr{0.3, 0.9, 0.1, 0.5}, yr{0, 2, 1, 3};
  const GpKernel k{1.0, 0.25, 0.1};
  const auto a = gp_posterior(gp_fit(x, y, k), {0.0, 0.42, 0.77});
  const auto b = gp_posterior(gp_fit(xr, yr, k), {0.0, 0.42, 0.77});
  for (int i = 0; i < 3; ++i) {
    CHECK(a.mean[i] == doctest::Approx(b.mean[i]).epsilon(1e-10));
    CHECK(a.variance[i] == doctest::Approx(b.variance[i]).epsilon(1e-10));
  }
}

TEST_CASE("duplicate inputs without noise fall back to jitter") {
  const auto gp = gp_fit({0.5, 0.5}, {1.0, 1.0}, GpKernel{1.0, 0.2, 0.0});
  CHECK(gp.jitter > 0.0);
  CHECK_THROWS(gp_fit({}, {}, GpKernel{}));
}

TEST_CASE("expected improvement examples") {
  CHECK(expected_improvement(1.0, 0.0, 3.0, 0.0) == 2.0);
  CHECK(expected_improvement(5.0, 0.0, 3.0, 0.0) == 0.0);
  // at mean == best the closed form reduces to sd * phi(0)
  CHECK(expected_improvement(2.0, 0.5, 2.0, 0.0) ==
        doctest::Approx(0.5 / std::sqrt(2.0 * std::numbers::pi)));
  CHECK(expected_improvement(1.0, 1.0, 2.0, 0.0) > expected_improvement(1.5, 1.0, 2.0, 0.0));
  CHECK(expected_improvement(1.0, 2.0, 2.0, 0.0) > expected_improvement(1.0, 1.0, 2.0, 0.0));
}
