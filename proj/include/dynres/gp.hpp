#pragma once

// 1-D Gaussian-process surrogate with an RBF kernel and EI acquisition.

#include <vector>

namespace dynres {

struct GpKernel {
  double signal_sd = 1.0;   // sigma_f
  double lengthscale = 0.2; // on normalized inputs
  double noise_sd = 0.1;    // sigma_n, must be > 0 for fitting

  double operator()(double a, double b) const;
};

/// Fitted GP. Inputs are used as given; callers normalize them. Targets are
/// standardized internally and posterior values are reported in raw units.
struct GpModel {
  GpKernel kernel;
  std::vector<double> x;
  std::vector<double> y;          // raw targets
  double y_mean = 0.0;
  double y_scale = 1.0;
  double jitter = 0.0;            // diagonal jitter actually used
  std::vector<double> chol;       // lower Cholesky factor of K + (noise^2 + jitter) I, row-major
  std::vector<double> alpha;      // (K + noise^2 I)^-1 standardized y
};

struct GpPosterior {
  std::vector<double> mean;
  std::vector<double> variance;   // raw units, clamped at 0
};

/// Throws if the matrix stays non positive-definite after jitter up to 1e-4.
GpModel gp_fit(const std::vector<double> &x, const std::vector<double> &y, const GpKernel &kernel);
GpPosterior gp_posterior(const GpModel &gp, const std::vector<double> &x_test);

/// In-place lower Cholesky of an n x n row-major SPD matrix; false if not PD.
bool cholesky(std::vector<double> &a, int n);

/// Minimization EI with margin xi for the given means and standard deviations.
double expected_improvement(double mean, double sd, double best, double xi);
std::vector<double> expected_improvement(const GpPosterior &post, double best, double xi);

}  // namespace dynres
