#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "earcap/ingest.hpp"

namespace earcap {

// Dense row-major feature matrix.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
};

struct SvmTrainOptions {
  double c = 0.025;
  double tolerance = 1e-4;  // largest allowed projected-gradient violation
  int max_sweeps = 1000;
  std::uint64_t shuffle_seed = 1;
  // Per-class multipliers on C (upper bound C * weight per sample). Both 1
  // by default: authentication leaves the 1-vs-rest imbalance unweighted.
  double positive_weight = 1.0;
  double negative_weight = 1.0;
};

struct SvmTrainResult {
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> alpha;    // dual variables, each in [0, c]
  double dual_objective = 0.0;  // 0.5 (|w|^2 + b^2) - sum(alpha)
  int sweeps = 0;
  bool converged = false;
};

// L2-regularized hinge-loss linear SVM trained by dual coordinate descent,
// with the bias folded in as a regularized constant feature:
//
//   min_a 0.5 a^T Q a - e^T a,  0 <= a_i <= C,  Q_ij = y_i y_j (x_i.x_j + 1)
//
// One sweep visits every active sample in a shuffled order; samples pinned
// at a bound by their gradient are shrunk from the active set and re-checked
// before convergence is declared. Deterministic for a fixed shuffle_seed.
SvmTrainResult train_linear_svm(const FeatureMatrix& features, const std::vector<int>& labels,
                                const SvmTrainOptions& options);

struct PlattParams {
  double a = -1.0;
  double b = 0.0;
};

// Sigmoid calibration P(accept | s) = 1 / (1 + exp(a s + b)) fit on decision
// values by regularized maximum likelihood with smoothed targets
// (N+ + 1)/(N+ + 2) and 1/(N- + 2), using Newton steps with backtracking.
// Stops when the gradient max-norm drops below 1e-10 or after 100 iterations.
// Fits that do not come out increasing in s fall back to a = -1, b = 0.
PlattParams fit_platt(const std::vector<double>& decision_values, const std::vector<int>& labels);

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  double platt_a = 0.0;
  double platt_b = 0.0;
  bool calibrated = false;
  std::optional<Standardizer> standardizer;
  double svm_c = 0.025;

  std::size_t dim() const { return weights.size(); }

  bool operator==(const LinearModel&) const = default;
};

// w.x~ + b, where x~ is the input after the model's standardizer (if any).
double decision_value(const LinearModel& model, std::span<const double> x);

// Same, for inputs already in the model's standardized space.
double decision_value_prepared(const LinearModel& model, std::span<const double> x);

double platt_probability(const PlattParams& platt, double decision);

// Calibrated accept probability in [0, 1]; throws StateError when the model
// has no Platt fit.
double predict_probability(const LinearModel& model, std::span<const double> x);
double predict_probability_prepared(const LinearModel& model, std::span<const double> x);

struct ModelTrainConfig {
  SvmTrainOptions svm;
  bool standardize = true;
  // 0 or 1: fit the sigmoid on the training decision values. >= 2: fit it
  // on out-of-fold decision values from that many round-robin inner folds
  // (the final weights still come from the full training set).
  int platt_inner_folds = 0;
};

// Fit standardizer (optional), train, then Platt-calibrate on the training
// decision values.
LinearModel train_binary_model(const FeatureMatrix& features, const std::vector<int>& labels,
                               const ModelTrainConfig& config);

struct OvrModel {
  std::vector<std::string> class_ids;  // prediction ties break toward the earlier entry
  std::vector<LinearModel> models;

  bool operator==(const OvrModel&) const = default;
};

// One binary model per distinct label (that class +1, rest -1), each
// calibrated on its own training decisions. class_ids come out sorted.
// `threads` parallelizes the per-class trainings.
OvrModel train_ovr(const FeatureMatrix& features, const std::vector<std::string>& class_labels,
                   const ModelTrainConfig& config, int threads = 1);

std::vector<double> class_probabilities(const OvrModel& model, std::span<const double> x);
std::string predict_class(const OvrModel& model, std::span<const double> x);

}  // namespace earcap
