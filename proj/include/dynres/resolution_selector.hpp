#pragma once

// Resolution labeling by Bayesian optimization over a budgeted planning cost,
// and a regressor that predicts the label from (observation, goal).

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dynres/autodiff.hpp"
#include "dynres/checkpoint.hpp"
#include "dynres/gp.hpp"
#include "dynres/objective.hpp"
#include "dynres/planner_mpc.hpp"

namespace dynres {

/// Best planned cost at resolution `omega` with N = budget.iterations(omega).
double budgeted_cost(const SimConfig &sim, const Observation &obs, const GoalSpec &goal, int omega,
                     const GnnParams &model, const PerceptionParams &perception,
                     const PlannerConfig &planner, const ComputeBudget &budget, std::uint64_t seed);

/// w_R * c0 * omega.
double regularizer(int omega, double c0, double weight);

/// Task objective of the scene sampled at `omega_ref` (clamped to the foreground size).
double reference_cost(const Observation &obs, const GoalSpec &goal, int omega_ref,
                      const PerceptionParams &perception);

struct BoConfig {
  int omega_min = 10;
  int omega_max = 100;
  int n_init = 5;
  int n_iter = 10;
  double xi = 0.01;
  GpKernel kernel;
  void validate() const;
};

struct BoSample {
  int omega = 0;
  double value = 0.0;
};

struct BoResult {
  int omega_star = 0;
  std::vector<BoSample> samples;    // evaluation order
  std::vector<double> grid_mean;    // GP mean at omega_min..omega_max
};

/// Normalized input used by the surrogate.
double bo_normalize(int omega, const BoConfig &cfg);

/// Surrogate fitted on `samples`, evaluated on the integer grid.
std::vector<double> bo_grid_mean(const std::vector<BoSample> &samples, const BoConfig &cfg);

/// Minimizes `objective` over integers in [omega_min, omega_max]. The label
/// is the grid argmin of the final GP mean (lowest omega on ties).
BoResult bo_label(const std::function<double(int)> &objective, const BoConfig &cfg);

// ---- regressor --------------------------------------------------------------

constexpr int kPoolSize = 16;
constexpr int kFeatureSize = 2 * kPoolSize * kPoolSize + 4;

/// Pooled occupancy, pooled goal heatmap, then: occupied fraction, normalized
/// distribution distance / grid width, centroid offset (x, y) / grid width.
std::vector<double> featurize(const Observation &obs, const GoalSpec &goal);

struct RegressorConfig {
  int hidden = 128;
  int epochs = 400;
  double lr = 1e-3;
  double weight_decay = 1e-2;
  double val_fraction = 0.2;
  int omega_min = 10;
  int omega_max = 100;
  void validate() const;
};

struct ResolutionRegressor {
  RegressorConfig cfg;
  ad::Matrix x_mean{1, kFeatureSize, 0.0};  // training-split feature means, subtracted before the MLP
  ad::Param w1, b1, w2, b2;

  /// Network output in label units ([0, 1] maps to [omega_min, omega_max]).
  double raw(const std::vector<double> &features) const;
  std::vector<NamedTensor> to_tensors() const;
  static ResolutionRegressor from_tensors(const std::vector<NamedTensor> &tensors);
};

struct LabelRecord {
  std::string source;  // scene reference
  int step = 0;
  int omega_star = 0;
  std::vector<BoSample> samples;
  std::vector<double> features;
};

std::string label_record_line(const LabelRecord &r);
LabelRecord parse_label_record(const std::string &line);
std::vector<LabelRecord> parse_label_file(const std::string &text);

struct RegressorFit {
  ResolutionRegressor model;
  double train_mse = 0.0;  // normalized label units
  double val_mse = 0.0;
  double label_variance = 0.0;  // of the validation labels, normalized units
};

RegressorFit train_regressor(const std::vector<LabelRecord> &labels, const RegressorConfig &cfg,
                             std::uint64_t seed);

/// Rounded prediction clamped to [omega_min, min(omega_max, foreground size)].
int predict_resolution(const ResolutionRegressor &reg, const Observation &obs, const GoalSpec &goal);
int predict_resolution(const ResolutionRegressor &reg, const std::vector<double> &features,
                       int foreground_size);

}  // namespace dynres
