#include "dynres/gp.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dynres {

double GpKernel::operator()(double a, double b) const {
  const double d = (a - b) / lengthscale;
  return signal_sd * signal_sd * std::exp(-0.5 * d * d);
}

bool cholesky(std::vector<double> &a, int n) {
  for (int j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (int k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0)) return false;
    const double ljj = std::sqrt(d);
    a[j * n + j] = ljj;
    for (int i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (int k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / ljj;
    }
    for (int k = j + 1; k < n; ++k) a[j * n + k] = 0.0;
  }
  return true;
}

namespace {

// L z = b
void forward_sub(const std::vector<double> &l, int n, std::vector<double> &b) {
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= l[i * n + k] * b[k];
    b[i] = s / l[i * n + i];
  }
}

// L^T z = b
void backward_sub(const std::vector<double> &l, int n, std::vector<double> &b) {
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int k = i + 1; k < n; ++k) s -= l[k * n + i] * b[k];
    b[i] = s / l[i * n + i];
  }
}

}  // namespace

GpModel gp_fit(const std::vector<double> &x, const std::vector<double> &y, const GpKernel &kernel) {
  if (x.empty() || x.size() != y.size()) throw std::invalid_argument("gp_fit: need matching non-empty x, y");
  if (!(kernel.noise_sd >= 0.0) || !(kernel.lengthscale > 0.0))
    throw std::invalid_argument("gp_fit: invalid kernel parameters");
  GpModel gp;
  gp.kernel = kernel;
  gp.x = x;
  gp.y = y;
  const int n = static_cast<int>(x.size());
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  var /= n;
  gp.y_mean = mean;
  gp.y_scale = var > 1e-24 ? std::sqrt(var) : 1.0;

  const double noise = kernel.noise_sd * kernel.noise_sd;
  for (double jitter = 0.0;; jitter = jitter == 0.0 ? 1e-8 : jitter * 10.0) {
    if (jitter > 1e-4 * 1.0000001) throw std::runtime_error("gp_fit: kernel matrix not positive definite");
    std::vector<double> k(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) k[i * n + j] = kernel(x[i], x[j]) + (i == j ? noise + jitter : 0.0);
    if (cholesky(k, n)) {
      gp.chol = std::move(k);
      gp.jitter = jitter;
      break;
    }
  }
  gp.alpha.resize(n);
  for (int i = 0; i < n; ++i) gp.alpha[i] = (y[i] - gp.y_mean) / gp.y_scale;
  forward_sub(gp.chol, n, gp.alpha);
  backward_sub(gp.chol, n, gp.alpha);
  return gp;
}

GpPosterior gp_posterior(const GpModel &gp, const std::vector<double> &x_test) {
  const int n = static_cast<int>(gp.x.size());
  if (n == 0) throw std::invalid_argument("gp_posterior: model not fitted");
  GpPosterior post;
  std::vector<double> ks(n);
  for (double xt : x_test) {
    double mu = 0.0;
    for (int i = 0; i < n; ++i) {
      ks[i] = gp.kernel(xt, gp.x[i]);
      mu += ks[i] * gp.alpha[i];
    }
    forward_sub(gp.chol, n, ks);
    double v = gp.kernel(xt, xt);
    for (double z : ks) v -= z * z;
    if (v < 0.0) v = 0.0;
    post.mean.push_back(gp.y_mean + gp.y_scale * mu);
    post.variance.push_back(v * gp.y_scale * gp.y_scale);
  }
  return post;
}

double expected_improvement(double mean, double sd, double best, double xi) {
  const double imp = best - mean - xi;
  if (!(sd > 0.0)) return std::max(0.0, imp);
  const double z = imp / sd;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return imp * cdf + sd * pdf;
}

std::vector<double> expected_improvement(const GpPosterior &post, double best, double xi) {
  std::vector<double> out;
  out.reserve(post.mean.size());
  for (std::size_t i = 0; i < post.mean.size(); ++i)
    out.push_back(expected_improvement(post.mean[i], std::sqrt(post.variance[i]), best, xi));
  return out;
}

}  // namespace dynres
