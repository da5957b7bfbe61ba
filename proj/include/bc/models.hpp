#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bc/features.hpp"

namespace bc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// LASSO + stability selection

struct LassoConfig {
  double lambda = 0.2;
  int rounds = 100;
  double subsample_fraction = 0.5;
  double select_threshold = 0.6;
  int max_iter = 10000;
  double tol = 1e-7;

  void validate() const;
};

struct LassoResult {
  Vector weights;             // in the caller's (unstandardized) feature scale
  double intercept = 0.0;
  Vector standardized_weights;
  int iterations = 0;
  bool converged = false;     // false: DidNotConverge, best iterate returned
};

/// Minimizes (1/2n)||y - Xw||^2 + lambda*||w||_1 over internally standardized
/// columns (mean 0, mean square 1) and centred y, by cyclic coordinate descent.
/// Zero-variance columns get weight 0.
LassoResult lasso_fit(const Matrix& X, const Vector& y, double lambda, int max_iter = 10000, double tol = 1e-7);

struct StabilitySelection {
  std::vector<int> selected;
  std::vector<double> frequencies;
  int rounds_run = 0;
  std::vector<std::string> warnings;
};

/// Repeated LASSO on subsamples of floor(n * subsample_fraction) rows drawn
/// without replacement. Round r uses derive_seed(seed, r), so the result
/// does not depend on scheduling. `threads` > 1 runs rounds in parallel.
StabilitySelection stability_select(const Matrix& X, const Vector& y, const LassoConfig& cfg, std::uint64_t seed,
                                    int threads = 1);

// ---------------------------------------------------------------------------
// Linear SVM

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;
};

struct SvmModel {
  std::string schema_id;
  std::vector<int> feature_indices;  // into the full FeatureVector
  std::vector<double> weights;       // over standardized selected features
  double bias = 0.0;
  Standardizer standardizer;
};

struct SvmConfig {
  double c = 1.0;
  int epochs = 50;
};

struct SvmTrainReport {
  std::vector<double> epoch_objective;  // objective of the running average after each epoch
  std::vector<int> dropped_features;    // zero variance in training data
};

/// Linear SVM by seeded Pegasos-style stochastic subgradient descent on
///   (1/2)||w||^2 + c * mean_i hinge(y_i (w.x_i + b)),
/// with the bias as an extra constant input. Identical rows are merged into
/// weighted rows before training, so duplicating the data set leaves the
/// model unchanged. Returns the average of the second-half iterates.
SvmModel svm_train(const Matrix& X, std::span<const int> y, const SvmConfig& cfg, std::uint64_t seed,
                   std::span<const int> feature_indices = {}, const std::string& schema_id = "",
                   SvmTrainReport* report = nullptr);

/// Signed distance (w.x~ + b)/||w|| with x~ the standardized selected features.
double svm_decision(const SvmModel& m, const FeatureVector& x);
/// Same on a raw full-length row (no schema check).
double svm_decision_row(const SvmModel& m, std::span<const double> row);
/// +1 / -1 with ties to +1.
int svm_predict(const SvmModel& m, const FeatureVector& x);
inline int sign_with_tie(double d) { return d >= 0.0 ? 1 : -1; }

// ---------------------------------------------------------------------------
// Platt calibration

struct PlattParams {
  double alpha = -1.0;
  double beta = 0.0;
};

/// P(y=1|d) = 1/(1 + exp(alpha*d + beta)), maximum likelihood with smoothed
/// targets by Newton's method with backtracking.
PlattParams platt_fit(std::span<const double> ds, std::span<const int> ys01, int max_iter = 100);
double platt_score(double d, const PlattParams& p);

// ---------------------------------------------------------------------------
// Metrics

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

Metrics eval_metrics(std::span<const int> pred, std::span<const int> truth);

}  // namespace bc
