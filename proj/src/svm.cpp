#include "earcap/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "earcap/error.hpp"
#include "earcap/parallel.hpp"

namespace earcap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_training_input(const FeatureMatrix& x, const std::vector<int>& y,
                          const SvmTrainOptions& opt) {
  if (x.rows < 2) throw TrainingError("training needs at least 2 samples");
  if (y.size() != x.rows) {
    throw InputError("labels size " + std::to_string(y.size()) + " does not match " +
                     std::to_string(x.rows) + " samples");
  }
  bool has_pos = false;
  bool has_neg = false;
  for (const int label : y) {
    if (label == 1) {
      has_pos = true;
    } else if (label == -1) {
      has_neg = true;
    } else {
      throw InputError("labels must be +1 or -1, got " + std::to_string(label));
    }
  }
  if (!has_pos || !has_neg) throw TrainingError("training needs both classes present");
  for (const double v : x.data) {
    if (!std::isfinite(v)) throw InputError("features must be finite");
  }
  if (!(opt.c > 0.0)) throw InputError("C must be > 0");
  if (!(opt.tolerance > 0.0)) throw InputError("tolerance must be > 0");
  if (opt.max_sweeps < 1) throw InputError("max_sweeps must be >= 1");
  if (!(opt.positive_weight > 0.0) || !(opt.negative_weight > 0.0)) {
    throw InputError("class weights must be > 0");
  }
}

}  // namespace

SvmTrainResult train_linear_svm(const FeatureMatrix& x, const std::vector<int>& labels,
                                const SvmTrainOptions& opt) {
  check_training_input(x, labels, opt);

  const std::size_t n = x.rows;
  const std::size_t d = x.cols;
  const double c_pos = opt.c * opt.positive_weight;
  const double c_neg = opt.c * opt.negative_weight;

  SvmTrainResult result;
  result.weights.assign(d, 0.0);
  result.alpha.assign(n, 0.0);
  double& bias = result.bias;

  std::vector<double> qd(n);  // x_i.x_i + 1 (the +1 is the bias feature)
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (const double v : x.row(i)) s += v * v;
    qd[i] = s + 1.0;
  }

  std::vector<std::size_t> index(n);
  for (std::size_t i = 0; i < n; ++i) index[i] = i;

  std::mt19937_64 rng(opt.shuffle_seed);
  std::size_t active = n;
  double pgmax_old = kInf;
  double pgmin_old = -kInf;

  double* w = result.weights.data();
  const double* xd = x.data.data();

  while (result.sweeps < opt.max_sweeps) {
    // Shuffle the active prefix.
    for (std::size_t i = 0; i + 1 < active; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng() % (active - i));
      std::swap(index[i], index[j]);
    }

    double pgmax = -kInf;
    double pgmin = kInf;
    double max_violation = 0.0;

    for (std::size_t s = 0; s < active; ++s) {
      const std::size_t i = index[s];
      const double yi = labels[i];
      const double ci = labels[i] == 1 ? c_pos : c_neg;
      const double* xi = xd + i * d;

      double g = bias;
      for (std::size_t k = 0; k < d; ++k) g += w[k] * xi[k];
      g = g * yi - 1.0;

      double pg = g;
      if (result.alpha[i] == 0.0) {
        if (g > pgmax_old) {
          --active;
          std::swap(index[s], index[active]);
          --s;
          continue;
        }
        pg = std::min(g, 0.0);
      } else if (result.alpha[i] == ci) {
        if (g < pgmin_old) {
          --active;
          std::swap(index[s], index[active]);
          --s;
          continue;
        }
        pg = std::max(g, 0.0);
      }

      pgmax = std::max(pgmax, pg);
      pgmin = std::min(pgmin, pg);
      max_violation = std::max(max_violation, std::abs(pg));

      if (std::abs(pg) > 1e-12) {
        const double alpha_old = result.alpha[i];
        result.alpha[i] = std::clamp(alpha_old - g / qd[i], 0.0, ci);
        const double delta = (result.alpha[i] - alpha_old) * yi;
        if (delta != 0.0) {
          for (std::size_t k = 0; k < d; ++k) w[k] += delta * xi[k];
          bias += delta;
        }
      }
    }

    ++result.sweeps;

    if (max_violation < opt.tolerance) {
      if (active == n) {
        result.converged = true;
        break;
      }
      // Shrunk problem converged: re-check everything before stopping.
      active = n;
      pgmax_old = kInf;
      pgmin_old = -kInf;
      continue;
    }

    pgmax_old = (pgmax <= 0.0) ? kInf : pgmax;
    pgmin_old = (pgmin >= 0.0) ? -kInf : pgmin;
  }

  double norm_sq = bias * bias;
  for (const double v : result.weights) norm_sq += v * v;
  double alpha_sum = 0.0;
  for (const double a : result.alpha) alpha_sum += a;
  result.dual_objective = 0.5 * norm_sq - alpha_sum;
  return result;
}

namespace {

// Negative log-likelihood of the smoothed targets under the sigmoid
// 1/(1+exp(a s + b)), evaluated without overflow.
double platt_objective(const std::vector<double>& s, const std::vector<double>& t, double a,
                       double b) {
  double value = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double z = a * s[i] + b;
    if (z >= 0.0) {
      value += t[i] * z + std::log1p(std::exp(-z));
    } else {
      value += (t[i] - 1.0) * z + std::log1p(std::exp(z));
    }
  }
  return value;
}

}  // namespace

PlattParams fit_platt(const std::vector<double>& decision_values, const std::vector<int>& labels) {
  if (decision_values.size() != labels.size()) {
    throw InputError("decision values and labels must have equal length");
  }
  double n_pos = 0.0;
  double n_neg = 0.0;
  for (const int label : labels) {
    if (label == 1) {
      n_pos += 1.0;
    } else if (label == -1) {
      n_neg += 1.0;
    } else {
      throw InputError("labels must be +1 or -1");
    }
  }
  if (n_pos == 0.0 || n_neg == 0.0) {
    throw CalibrationError("calibration needs both classes present");
  }

  const double t_pos = (n_pos + 1.0) / (n_pos + 2.0);
  const double t_neg = 1.0 / (n_neg + 2.0);
  std::vector<double> targets(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    targets[i] = labels[i] == 1 ? t_pos : t_neg;
  }

  double a = 0.0;
  double b = std::log((n_neg + 1.0) / (n_pos + 1.0));
  double fval = platt_objective(decision_values, targets, a, b);

  constexpr double kSigma = 1e-12;  // Hessian ridge
  constexpr double kGradTol = 1e-10;
  constexpr double kMinStep = 1e-10;

  for (int iteration = 0; iteration < 100; ++iteration) {
    double h11 = kSigma;
    double h22 = kSigma;
    double h21 = 0.0;
    double g1 = 0.0;
    double g2 = 0.0;
    for (std::size_t i = 0; i < decision_values.size(); ++i) {
      const double z = a * decision_values[i] + b;
      double p;
      double q;
      if (z >= 0.0) {
        const double e = std::exp(-z);
        p = e / (1.0 + e);
        q = 1.0 / (1.0 + e);
      } else {
        const double e = std::exp(z);
        p = 1.0 / (1.0 + e);
        q = e / (1.0 + e);
      }
      const double pq = p * q;
      h11 += decision_values[i] * decision_values[i] * pq;
      h22 += pq;
      h21 += decision_values[i] * pq;
      const double diff = targets[i] - p;
      g1 += decision_values[i] * diff;
      g2 += diff;
    }

    if (std::max(std::abs(g1), std::abs(g2)) < kGradTol) break;

    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;

    double step = 1.0;
    while (step >= kMinStep) {
      const double new_a = a + step * da;
      const double new_b = b + step * db;
      const double new_f = platt_objective(decision_values, targets, new_a, new_b);
      if (new_f < fval + 1e-4 * step * gd) {
        a = new_a;
        b = new_b;
        fval = new_f;
        break;
      }
      step *= 0.5;
    }
    if (step < kMinStep) break;  // line search stalled
  }

  if (!std::isfinite(a) || !std::isfinite(b) || a >= 0.0) {
    // A non-increasing fit would invert the score ordering; fall back to the
    // identity-slope sigmoid.
    return PlattParams{-1.0, 0.0};
  }
  return PlattParams{a, b};
}

double decision_value(const LinearModel& model, std::span<const double> x) {
  if (model.standardizer) {
    const std::vector<double> prepared = standardize(*model.standardizer, x);
    return decision_value_prepared(model, prepared);
  }
  return decision_value_prepared(model, x);
}

double decision_value_prepared(const LinearModel& model, std::span<const double> x) {
  if (x.size() != model.weights.size()) {
    throw InputError("decision_value: input has " + std::to_string(x.size()) +
                     " dimensions, model has " + std::to_string(model.weights.size()));
  }
  double s = model.bias;
  for (std::size_t k = 0; k < x.size(); ++k) s += model.weights[k] * x[k];
  return s;
}

double platt_probability(const PlattParams& platt, double decision) {
  const double z = platt.a * decision + platt.b;
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

double predict_probability(const LinearModel& model, std::span<const double> x) {
  if (!model.calibrated) throw StateError("model has no probability calibration");
  return platt_probability(PlattParams{model.platt_a, model.platt_b}, decision_value(model, x));
}

double predict_probability_prepared(const LinearModel& model, std::span<const double> x) {
  if (!model.calibrated) throw StateError("model has no probability calibration");
  return platt_probability(PlattParams{model.platt_a, model.platt_b},
                           decision_value_prepared(model, x));
}

namespace {

FeatureMatrix standardized_copy(const FeatureMatrix& x, const Standardizer& std_params) {
  FeatureMatrix out(x.rows, x.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const auto in_row = x.row(i);
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < x.cols; ++k) {
      out_row[k] = (in_row[k] - std_params.mean[k]) / std_params.stddev[k];
    }
  }
  return out;
}

Standardizer fit_standardizer_matrix(const FeatureMatrix& x) {
  if (x.rows < 2) throw InsufficientDataError("standardizer needs at least 2 rows");
  Standardizer out;
  out.mean.assign(x.cols, 0.0);
  out.stddev.assign(x.cols, 0.0);
  out.degenerate.assign(x.cols, 0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const auto row = x.row(i);
    for (std::size_t k = 0; k < x.cols; ++k) out.mean[k] += row[k];
  }
  for (auto& m : out.mean) m /= static_cast<double>(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const auto row = x.row(i);
    for (std::size_t k = 0; k < x.cols; ++k) {
      const double diff = row[k] - out.mean[k];
      out.stddev[k] += diff * diff;
    }
  }
  for (std::size_t k = 0; k < x.cols; ++k) {
    out.stddev[k] = std::sqrt(out.stddev[k] / static_cast<double>(x.rows));
    if (out.stddev[k] < kStddevFloor) {
      out.stddev[k] = kStddevFloor;
      out.degenerate[k] = 1;
    }
  }
  return out;
}

// Out-of-fold decision values from a stratified round-robin split; the
// sigmoid then sees decisions the final weights never trained on.
void inner_fold_decisions(const FeatureMatrix& prepared, const std::vector<int>& labels,
                          const ModelTrainConfig& config, std::vector<double>& decisions,
                          std::vector<int>& decision_labels) {
  const int folds = config.platt_inner_folds;
  std::size_t positives = 0;
  for (const int label : labels) positives += label == 1 ? 1 : 0;
  if (positives < 2 || labels.size() - positives < 2) {
    throw CalibrationError("inner calibration needs at least 2 samples per class");
  }

  std::vector<int> fold_of(labels.size());
  int next_pos = 0;
  int next_neg = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      fold_of[i] = next_pos++ % folds;
    } else {
      fold_of[i] = next_neg++ % folds;
    }
  }

  for (int f = 0; f < folds; ++f) {
    FeatureMatrix sub(0, prepared.cols);
    sub.data.clear();
    std::vector<int> sub_labels;
    std::vector<std::size_t> held_out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (fold_of[i] == f) {
        held_out.push_back(i);
      } else {
        const auto row = prepared.row(i);
        sub.data.insert(sub.data.end(), row.begin(), row.end());
        ++sub.rows;
        sub_labels.push_back(labels[i]);
      }
    }
    if (held_out.empty()) continue;

    const SvmTrainResult fold_model = train_linear_svm(sub, sub_labels, config.svm);
    for (const std::size_t i : held_out) {
      const auto row = prepared.row(i);
      double s = fold_model.bias;
      for (std::size_t k = 0; k < row.size(); ++k) s += fold_model.weights[k] * row[k];
      decisions.push_back(s);
      decision_labels.push_back(labels[i]);
    }
  }
}

LinearModel train_on_prepared(const FeatureMatrix& prepared, const std::vector<int>& labels,
                              const ModelTrainConfig& config) {
  const SvmTrainResult trained = train_linear_svm(prepared, labels, config.svm);

  LinearModel model;
  model.weights = trained.weights;
  model.bias = trained.bias;
  model.svm_c = config.svm.c;

  std::vector<double> decisions;
  std::vector<int> decision_labels;
  if (config.platt_inner_folds >= 2) {
    inner_fold_decisions(prepared, labels, config, decisions, decision_labels);
  } else {
    decisions.resize(prepared.rows);
    for (std::size_t i = 0; i < prepared.rows; ++i) {
      decisions[i] = decision_value_prepared(model, prepared.row(i));
    }
    decision_labels = labels;
  }
  const PlattParams platt = fit_platt(decisions, decision_labels);
  model.platt_a = platt.a;
  model.platt_b = platt.b;
  model.calibrated = true;
  return model;
}

}  // namespace

LinearModel train_binary_model(const FeatureMatrix& features, const std::vector<int>& labels,
                               const ModelTrainConfig& config) {
  if (config.standardize) {
    const Standardizer std_params = fit_standardizer_matrix(features);
    LinearModel model = train_on_prepared(standardized_copy(features, std_params), labels, config);
    model.standardizer = std_params;
    return model;
  }
  return train_on_prepared(features, labels, config);
}

OvrModel train_ovr(const FeatureMatrix& features, const std::vector<std::string>& class_labels,
                   const ModelTrainConfig& config, int threads) {
  if (class_labels.size() != features.rows) {
    throw InputError("class labels size does not match sample count");
  }

  OvrModel ovr;
  ovr.class_ids = class_labels;
  std::sort(ovr.class_ids.begin(), ovr.class_ids.end());
  ovr.class_ids.erase(std::unique(ovr.class_ids.begin(), ovr.class_ids.end()),
                      ovr.class_ids.end());
  if (ovr.class_ids.size() < 2) {
    throw TrainingError("one-vs-rest needs at least 2 classes, got " +
                        std::to_string(ovr.class_ids.size()));
  }

  std::optional<Standardizer> std_params;
  const FeatureMatrix* prepared = &features;
  FeatureMatrix prepared_storage;
  if (config.standardize) {
    std_params = fit_standardizer_matrix(features);
    prepared_storage = standardized_copy(features, *std_params);
    prepared = &prepared_storage;
  }

  ovr.models.resize(ovr.class_ids.size());
  parallel_for(ovr.class_ids.size(), threads, [&](std::size_t c) {
    std::vector<int> labels(features.rows);
    for (std::size_t i = 0; i < features.rows; ++i) {
      labels[i] = class_labels[i] == ovr.class_ids[c] ? 1 : -1;
    }
    ModelTrainConfig per_class = config;
    per_class.standardize = false;  // shared standardizer, applied once above
    LinearModel model = train_on_prepared(*prepared, labels, per_class);
    model.standardizer = std_params;
    ovr.models[c] = std::move(model);
  });

  return ovr;
}

std::vector<double> class_probabilities(const OvrModel& model, std::span<const double> x) {
  if (model.models.empty()) throw StateError("one-vs-rest model has no classes");
  std::vector<double> probabilities(model.models.size());
  for (std::size_t c = 0; c < model.models.size(); ++c) {
    probabilities[c] = predict_probability(model.models[c], x);
  }
  return probabilities;
}

std::string predict_class(const OvrModel& model, std::span<const double> x) {
  const std::vector<double> probabilities = class_probabilities(model, x);
  std::size_t best = 0;
  for (std::size_t c = 1; c < probabilities.size(); ++c) {
    if (probabilities[c] > probabilities[best]) best = c;  // ties keep the earlier class
  }
  return model.class_ids[best];
}

}  // namespace earcap
