#include "earcap/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "earcap/error.hpp"
#include "earcap/fsio.hpp"
#include "earcap/ingest.hpp"
#include "earcap/parallel.hpp"

namespace earcap {

namespace {

using ordered_json = nlohmann::ordered_json;

}  // namespace

std::pair<double, double> far_frr_at_threshold(const std::vector<double>& genuine_scores,
                                               const std::vector<double>& impostor_scores,
                                               double threshold) {
  if (genuine_scores.empty()) throw InputError("genuine score list is empty");
  if (impostor_scores.empty()) throw InputError("impostor score list is empty");

  std::size_t accepted_impostors = 0;
  for (const double s : impostor_scores) {
    if (s >= threshold) ++accepted_impostors;
  }
  std::size_t rejected_genuine = 0;
  for (const double s : genuine_scores) {
    if (s < threshold) ++rejected_genuine;
  }
  return {static_cast<double>(accepted_impostors) / static_cast<double>(impostor_scores.size()),
          static_cast<double>(rejected_genuine) / static_cast<double>(genuine_scores.size())};
}

SweepResult sweep_thresholds(const std::vector<double>& genuine_scores,
                             const std::vector<double>& impostor_scores,
                             const std::vector<double>* grid) {
  if (genuine_scores.empty()) throw InputError("genuine score list is empty");
  if (impostor_scores.empty()) throw InputError("impostor score list is empty");

  std::vector<double> genuine_sorted = genuine_scores;
  std::vector<double> impostor_sorted = impostor_scores;
  std::sort(genuine_sorted.begin(), genuine_sorted.end());
  std::sort(impostor_sorted.begin(), impostor_sorted.end());

  SweepResult result;
  if (grid) {
    result.thresholds = *grid;
  } else {
    result.thresholds.reserve(genuine_sorted.size() + impostor_sorted.size() + 2);
    result.thresholds.push_back(0.0);
    result.thresholds.push_back(1.0);
    result.thresholds.insert(result.thresholds.end(), genuine_sorted.begin(),
                             genuine_sorted.end());
    result.thresholds.insert(result.thresholds.end(), impostor_sorted.begin(),
                             impostor_sorted.end());
  }
  std::sort(result.thresholds.begin(), result.thresholds.end());
  result.thresholds.erase(std::unique(result.thresholds.begin(), result.thresholds.end()),
                          result.thresholds.end());
  if (result.thresholds.empty()) throw InputError("threshold grid is empty");

  const double n_genuine = static_cast<double>(genuine_sorted.size());
  const double n_impostor = static_cast<double>(impostor_sorted.size());
  result.far.resize(result.thresholds.size());
  result.frr.resize(result.thresholds.size());
  for (std::size_t k = 0; k < result.thresholds.size(); ++k) {
    const double t = result.thresholds[k];
    const auto below_imp =
        std::lower_bound(impostor_sorted.begin(), impostor_sorted.end(), t) -
        impostor_sorted.begin();
    const auto below_gen =
        std::lower_bound(genuine_sorted.begin(), genuine_sorted.end(), t) -
        genuine_sorted.begin();
    result.far[k] = (n_impostor - static_cast<double>(below_imp)) / n_impostor;
    result.frr[k] = static_cast<double>(below_gen) / n_genuine;
  }

  // EER at the FAR = FRR crossing, linearly interpolated between the two
  // bracketing thresholds.
  std::size_t cross = result.thresholds.size();
  for (std::size_t k = 0; k < result.thresholds.size(); ++k) {
    if (result.far[k] <= result.frr[k]) {
      cross = k;
      break;
    }
  }

  if (cross == result.thresholds.size()) {
    // FAR stays above FRR over the whole grid; report the closest point.
    std::size_t best = 0;
    for (std::size_t k = 1; k < result.thresholds.size(); ++k) {
      if (std::abs(result.far[k] - result.frr[k]) <
          std::abs(result.far[best] - result.frr[best])) {
        best = k;
      }
    }
    result.eer = 0.5 * (result.far[best] + result.frr[best]);
    result.eer_threshold = result.thresholds[best];
  } else if (cross == 0) {
    result.eer = 0.5 * (result.far[0] + result.frr[0]);
    result.eer_threshold = result.thresholds[0];
  } else {
    const double d_prev = result.far[cross - 1] - result.frr[cross - 1];
    const double d_here = result.far[cross] - result.frr[cross];
    const double fraction = d_prev / (d_prev - d_here);
    result.eer_threshold = result.thresholds[cross - 1] +
                           fraction * (result.thresholds[cross] - result.thresholds[cross - 1]);
    result.eer =
        result.far[cross - 1] + fraction * (result.far[cross] - result.far[cross - 1]);
  }
  return result;
}

std::int64_t ConfusionMatrix::row_total(std::size_t true_class) const {
  std::int64_t total = 0;
  for (std::size_t c = 0; c < class_ids.size(); ++c) total += at(true_class, c);
  return total;
}

std::int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t trace = 0;
  for (std::size_t c = 0; c < class_ids.size(); ++c) trace += at(c, c);
  return trace;
}

double ConfusionMatrix::accuracy() const {
  const std::int64_t n = total();
  return n == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(n);
}

namespace {

struct PreparedSession {
  int session_index = 0;
  std::vector<Chunk> chunks;
};

struct Prepared {
  std::vector<std::string> pids;
  std::vector<std::vector<PreparedSession>> rest;     // [participant][position]
  std::vector<std::vector<PreparedSession>> walking;  // [participant][position]
  std::vector<int> rest_indices;                      // shared across participants
  std::vector<int> walking_indices;

  int rest_count() const { return static_cast<int>(rest_indices.size()); }
};

std::vector<PreparedSession> prepare_sessions(const Dataset& dataset, std::string_view pid,
                                              Activity activity, const PipelineConfig& config) {
  std::vector<PreparedSession> out;
  for (const WearingSession* session : dataset.sessions_of(pid, activity)) {
    PreparedSession prepared;
    prepared.session_index = session->session_index;
    const WearingSession trimmed =
        trim_session(*session, config.head_trim_s, config.tail_trim_s);
    prepared.chunks = chunk_session(trimmed, config.chunk_len_frames);
    out.push_back(std::move(prepared));
  }
  return out;
}

Prepared prepare(const Dataset& dataset, const PipelineConfig& config, bool need_walking,
                 const std::string& protocol) {
  config.validate();

  Prepared prep;
  prep.pids = dataset.participant_ids();
  if (prep.pids.size() < 2) {
    throw ProtocolError(protocol + " protocol requires at least 2 participants, got " +
                        std::to_string(prep.pids.size()));
  }

  for (const auto& pid : prep.pids) {
    prep.rest.push_back(prepare_sessions(dataset, pid, Activity::Rest, config));
    if (need_walking) {
      prep.walking.push_back(prepare_sessions(dataset, pid, Activity::Walking, config));
    }
  }

  // Stratified folds pair the same session indices across participants.
  for (std::size_t p = 0; p < prep.pids.size(); ++p) {
    std::vector<int> indices;
    for (const auto& s : prep.rest[p]) indices.push_back(s.session_index);
    if (p == 0) {
      prep.rest_indices = indices;
    } else if (indices != prep.rest_indices) {
      throw ProtocolError(protocol + " protocol: participant " + prep.pids[p] +
                          " has rest session indices that differ from participant " +
                          prep.pids[0]);
    }
  }
  if (need_walking) {
    for (std::size_t p = 0; p < prep.pids.size(); ++p) {
      std::vector<int> indices;
      for (const auto& s : prep.walking[p]) indices.push_back(s.session_index);
      if (p == 0) {
        prep.walking_indices = indices;
      } else if (indices != prep.walking_indices) {
        throw ProtocolError(protocol + " protocol: participant " + prep.pids[p] +
                            " has walking session indices that differ from participant " +
                            prep.pids[0]);
      }
    }
  }
  return prep;
}

SvmTrainOptions svm_options(const PipelineConfig& config) {
  SvmTrainOptions opt;
  opt.c = config.svm_c;
  opt.shuffle_seed = config.rng_seed;
  return opt;
}

void append_session(FeatureMatrix& matrix, std::vector<int>& owners,
                    const PreparedSession& session, int owner,
                    std::optional<std::size_t> max_chunks = {}) {
  const std::size_t take =
      max_chunks ? std::min(*max_chunks, session.chunks.size()) : session.chunks.size();
  for (std::size_t i = 0; i < take; ++i) {
    matrix.data.insert(matrix.data.end(), session.chunks[i].features.begin(),
                       session.chunks[i].features.end());
    owners.push_back(owner);
    ++matrix.rows;
  }
}

FeatureMatrix make_matrix() {
  FeatureMatrix m;
  m.cols = static_cast<std::size_t>(kChannelCount);
  return m;
}

// Scores accumulated per target across folds.
struct AuthScores {
  std::vector<std::vector<double>> genuine;
  std::vector<std::vector<double>> impostor;
};

void run_auth_split(const Prepared& prep, const std::vector<std::size_t>& targets,
                    const std::vector<int>& train_positions, bool test_on_walking,
                    const std::vector<int>& test_positions, const PipelineConfig& config,
                    int threads, AuthScores& scores) {
  FeatureMatrix train = make_matrix();
  std::vector<int> train_owner;
  for (std::size_t p = 0; p < prep.pids.size(); ++p) {
    for (const int pos : train_positions) {
      append_session(train, train_owner, prep.rest[p][static_cast<std::size_t>(pos)],
                     static_cast<int>(p));
    }
  }

  FeatureMatrix test = make_matrix();
  std::vector<int> test_owner;
  for (std::size_t p = 0; p < prep.pids.size(); ++p) {
    if (test_on_walking) {
      for (const auto& session : prep.walking[p]) {
        append_session(test, test_owner, session, static_cast<int>(p));
      }
    } else {
      for (const int pos : test_positions) {
        append_session(test, test_owner, prep.rest[p][static_cast<std::size_t>(pos)],
                       static_cast<int>(p));
      }
    }
  }

  const FeatureMatrix* train_ptr = &train;
  const FeatureMatrix* test_ptr = &test;
  FeatureMatrix train_std;
  FeatureMatrix test_std;
  if (config.standardize) {
    Standardizer std_params;
    std_params.mean.assign(train.cols, 0.0);
    std_params.stddev.assign(train.cols, 0.0);
    std_params.degenerate.assign(train.cols, 0);
    for (std::size_t i = 0; i < train.rows; ++i) {
      const auto row = train.row(i);
      for (std::size_t k = 0; k < train.cols; ++k) std_params.mean[k] += row[k];
    }
    for (auto& m : std_params.mean) m /= static_cast<double>(train.rows);
    for (std::size_t i = 0; i < train.rows; ++i) {
      const auto row = train.row(i);
      for (std::size_t k = 0; k < train.cols; ++k) {
        const double diff = row[k] - std_params.mean[k];
        std_params.stddev[k] += diff * diff;
      }
    }
    for (std::size_t k = 0; k < train.cols; ++k) {
      std_params.stddev[k] = std::sqrt(std_params.stddev[k] / static_cast<double>(train.rows));
      if (std_params.stddev[k] < kStddevFloor) {
        std_params.stddev[k] = kStddevFloor;
        std_params.degenerate[k] = 1;
      }
    }

    auto transform = [&](const FeatureMatrix& in) {
      FeatureMatrix out(in.rows, in.cols);
      for (std::size_t i = 0; i < in.rows; ++i) {
        const auto src = in.row(i);
        auto dst = out.row(i);
        for (std::size_t k = 0; k < in.cols; ++k) {
          dst[k] = (src[k] - std_params.mean[k]) / std_params.stddev[k];
        }
      }
      return out;
    };
    train_std = transform(train);
    test_std = transform(test);
    train_ptr = &train_std;
    test_ptr = &test_std;
  }

  parallel_for(targets.size(), threads, [&](std::size_t ti) {
    const std::size_t target = targets[ti];
    std::vector<int> labels(train_ptr->rows);
    for (std::size_t i = 0; i < train_ptr->rows; ++i) {
      labels[i] = train_owner[i] == static_cast<int>(target) ? 1 : -1;
    }
    const SvmTrainResult trained = train_linear_svm(*train_ptr, labels, svm_options(config));

    std::vector<double> decisions(train_ptr->rows);
    for (std::size_t i = 0; i < train_ptr->rows; ++i) {
      const auto row = train_ptr->row(i);
      double s = trained.bias;
      for (std::size_t k = 0; k < row.size(); ++k) s += trained.weights[k] * row[k];
      decisions[i] = s;
    }
    const PlattParams platt = fit_platt(decisions, labels);

    for (std::size_t i = 0; i < test_ptr->rows; ++i) {
      const auto row = test_ptr->row(i);
      double s = trained.bias;
      for (std::size_t k = 0; k < row.size(); ++k) s += trained.weights[k] * row[k];
      const double probability = platt_probability(platt, s);
      if (test_owner[i] == static_cast<int>(target)) {
        scores.genuine[target].push_back(probability);
      } else {
        scores.impostor[target].push_back(probability);
      }
    }
  });
}

AuthReport assemble_auth_report(const Prepared& prep, AuthScores& scores,
                                const PipelineConfig& config, const DatasetMetadata& metadata,
                                std::string protocol, std::vector<FoldAssignment> folds) {
  AuthReport report;
  report.protocol = std::move(protocol);
  report.config = config;
  report.dataset = metadata;
  report.participants = prep.pids.size();
  report.folds = std::move(folds);

  for (std::size_t p = 0; p < prep.pids.size(); ++p) {
    const SweepResult sweep = sweep_thresholds(scores.genuine[p], scores.impostor[p]);
    AuthUserResult user;
    user.participant_id = prep.pids[p];
    user.eer = sweep.eer;
    user.eer_threshold = sweep.eer_threshold;
    user.genuine_count = scores.genuine[p].size();
    user.impostor_count = scores.impostor[p].size();
    report.per_user.push_back(std::move(user));
    report.mean_user_eer += sweep.eer;

    report.pooled_genuine.insert(report.pooled_genuine.end(), scores.genuine[p].begin(),
                                 scores.genuine[p].end());
    report.pooled_impostor.insert(report.pooled_impostor.end(), scores.impostor[p].begin(),
                                  scores.impostor[p].end());
  }
  report.mean_user_eer /= static_cast<double>(prep.pids.size());
  report.pooled = sweep_thresholds(report.pooled_genuine, report.pooled_impostor);
  return report;
}

constexpr int kAuthTestSessionsPerFold = 4;

int checked_auth_fold_count(const Prepared& prep) {
  const int rest = prep.rest_count();
  if (rest < 2 * kAuthTestSessionsPerFold || rest % kAuthTestSessionsPerFold != 0) {
    throw ProtocolError("authentication protocol: participant " + prep.pids[0] + " has " +
                        std::to_string(rest) + " rest sessions; needs a multiple of " +
                        std::to_string(kAuthTestSessionsPerFold) + " and at least " +
                        std::to_string(2 * kAuthTestSessionsPerFold));
  }
  return rest / kAuthTestSessionsPerFold;
}

AuthScores run_auth_folds(const Prepared& prep, const std::vector<std::size_t>& targets,
                          const PipelineConfig& config, int threads,
                          std::vector<FoldAssignment>* folds_out) {
  const int rest = prep.rest_count();
  const int n_folds = checked_auth_fold_count(prep);

  AuthScores scores;
  scores.genuine.resize(prep.pids.size());
  scores.impostor.resize(prep.pids.size());

  for (int f = 0; f < n_folds; ++f) {
    std::vector<int> test_positions;
    std::vector<int> train_positions;
    for (int pos = 0; pos < rest; ++pos) {
      if (pos / kAuthTestSessionsPerFold == f) {
        test_positions.push_back(pos);
      } else {
        train_positions.push_back(pos);
      }
    }

    if (folds_out) {
      FoldAssignment assignment;
      assignment.fold = f;
      for (const int pos : train_positions) {
        assignment.train_sessions.push_back(prep.rest_indices[static_cast<std::size_t>(pos)]);
      }
      for (const int pos : test_positions) {
        assignment.test_sessions.push_back(prep.rest_indices[static_cast<std::size_t>(pos)]);
      }
      folds_out->push_back(std::move(assignment));
    }

    run_auth_split(prep, targets, train_positions, /*test_on_walking=*/false, test_positions,
                   config, threads, scores);
  }
  return scores;
}

}  // namespace

AuthReport auth_protocol(const Dataset& dataset, const PipelineConfig& config, int threads) {
  const Prepared prep = prepare(dataset, config, /*need_walking=*/false, "authentication");

  std::vector<std::size_t> targets(prep.pids.size());
  std::iota(targets.begin(), targets.end(), std::size_t{0});

  std::vector<FoldAssignment> folds;
  AuthScores scores = run_auth_folds(prep, targets, config, threads, &folds);

  return assemble_auth_report(prep, scores, config, dataset.metadata, "authentication",
                              std::move(folds));
}

AuthUserResult auth_eval_single_target(const Dataset& dataset, const PipelineConfig& config,
                                       const std::string& target_id, int threads) {
  const Prepared prep = prepare(dataset, config, /*need_walking=*/false, "authentication");
  const auto it = std::find(prep.pids.begin(), prep.pids.end(), target_id);
  if (it == prep.pids.end()) {
    throw InputError("unknown participant \"" + target_id + "\"");
  }
  const auto target = static_cast<std::size_t>(it - prep.pids.begin());

  AuthScores scores = run_auth_folds(prep, {target}, config, threads, nullptr);

  const SweepResult sweep = sweep_thresholds(scores.genuine[target], scores.impostor[target]);
  AuthUserResult result;
  result.participant_id = target_id;
  result.eer = sweep.eer;
  result.eer_threshold = sweep.eer_threshold;
  result.genuine_count = scores.genuine[target].size();
  result.impostor_count = scores.impostor[target].size();
  return result;
}

AuthReport motion_eval_auth(const Dataset& dataset, const PipelineConfig& config, int threads) {
  const Prepared prep = prepare(dataset, config, /*need_walking=*/true, "motion-authentication");
  for (std::size_t p = 0; p < prep.pids.size(); ++p) {
    if (prep.rest[p].empty() || prep.walking[p].empty()) {
      throw ProtocolError("motion evaluation: participant " + prep.pids[p] + " is missing " +
                          (prep.rest[p].empty() ? "rest" : "walking") + " sessions");
    }
  }

  AuthScores scores;
  scores.genuine.resize(prep.pids.size());
  scores.impostor.resize(prep.pids.size());

  std::vector<int> train_positions(static_cast<std::size_t>(prep.rest_count()));
  std::iota(train_positions.begin(), train_positions.end(), 0);

  FoldAssignment assignment;
  assignment.fold = 0;
  assignment.train_sessions = prep.rest_indices;
  assignment.test_sessions = prep.walking_indices;

  std::vector<std::size_t> targets(prep.pids.size());
  std::iota(targets.begin(), targets.end(), std::size_t{0});
  run_auth_split(prep, targets, train_positions, /*test_on_walking=*/true, {}, config, threads,
                 scores);

  return assemble_auth_report(prep, scores, config, dataset.metadata, "motion-authentication",
                              {assignment});
}

namespace {

struct IdFoldOutcome {
  double accuracy = 0.0;
  ConfusionMatrix confusion;
};

IdFoldOutcome run_id_fold(const Prepared& prep, const std::vector<int>& train_positions,
                          bool test_on_walking, int test_position,
                          std::optional<std::size_t> truncate_chunks,
                          const PipelineConfig& config, int threads) {
  FeatureMatrix train = make_matrix();
  std::vector<int> train_owner;
  std::vector<std::string> train_labels;
  for (std::size_t p = 0; p < prep.pids.size(); ++p) {
    for (const int pos : train_positions) {
      append_session(train, train_owner, prep.rest[p][static_cast<std::size_t>(pos)],
                     static_cast<int>(p), truncate_chunks);
    }
  }
  train_labels.reserve(train_owner.size());
  for (const int owner : train_owner) {
    train_labels.push_back(prep.pids[static_cast<std::size_t>(owner)]);
  }

  FeatureMatrix test = make_matrix();
  std::vector<int> test_owner;
  for (std::size_t p = 0; p < prep.pids.size(); ++p) {
    if (test_on_walking) {
      for (const auto& session : prep.walking[p]) {
        append_session(test, test_owner, session, static_cast<int>(p));
      }
    } else {
      append_session(test, test_owner, prep.rest[p][static_cast<std::size_t>(test_position)],
                     static_cast<int>(p));
    }
  }

  ModelTrainConfig train_config;
  train_config.svm = svm_options(config);
  train_config.standardize = config.standardize;
  const OvrModel ovr = train_ovr(train, train_labels, train_config, threads);

  // All per-class models share one standardizer; prepare test rows once.
  const FeatureMatrix* test_ptr = &test;
  FeatureMatrix test_std;
  if (!ovr.models.empty() && ovr.models.front().standardizer) {
    const Standardizer& std_params = *ovr.models.front().standardizer;
    test_std = FeatureMatrix(test.rows, test.cols);
    for (std::size_t i = 0; i < test.rows; ++i) {
      const auto src = test.row(i);
      auto dst = test_std.row(i);
      for (std::size_t k = 0; k < test.cols; ++k) {
        dst[k] = (src[k] - std_params.mean[k]) / std_params.stddev[k];
      }
    }
    test_ptr = &test_std;
  }

  IdFoldOutcome outcome;
  outcome.confusion.class_ids = ovr.class_ids;
  outcome.confusion.counts.assign(ovr.class_ids.size() * ovr.class_ids.size(), 0);

  for (std::size_t i = 0; i < test_ptr->rows; ++i) {
    const auto row = test_ptr->row(i);
    std::size_t best = 0;
    double best_probability = -1.0;
    for (std::size_t c = 0; c < ovr.models.size(); ++c) {
      const double probability = predict_probability_prepared(ovr.models[c], row);
      if (probability > best_probability) {
        best_probability = probability;
        best = c;
      }
    }
    const std::size_t truth = static_cast<std::size_t>(test_owner[i]);
    outcome.confusion.counts[truth * ovr.class_ids.size() + best] += 1;
  }
  outcome.accuracy = outcome.confusion.accuracy();
  return outcome;
}

std::pair<double, double> mean_and_population_std(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (const double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (const double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return {mean, std::sqrt(var)};
}

}  // namespace

IdReport id_protocol(const Dataset& dataset, const PipelineConfig& config, int threads) {
  const Prepared prep = prepare(dataset, config, /*need_walking=*/false, "identification");
  const int rest = prep.rest_count();
  if (rest < 2) {
    throw ProtocolError("identification protocol: participant " + prep.pids[0] + " has " +
                        std::to_string(rest) + " rest sessions; needs at least 2");
  }

  IdReport report;
  report.protocol = "identification";
  report.config = config;
  report.dataset = dataset.metadata;
  report.class_ids = prep.pids;

  std::vector<double> accuracies;
  for (int f = 0; f < rest; ++f) {
    std::vector<int> train_positions;
    for (int pos = 0; pos < rest; ++pos) {
      if (pos != f) train_positions.push_back(pos);
    }

    FoldAssignment assignment;
    assignment.fold = f;
    for (const int pos : train_positions) {
      assignment.train_sessions.push_back(prep.rest_indices[static_cast<std::size_t>(pos)]);
    }
    assignment.test_sessions.push_back(prep.rest_indices[static_cast<std::size_t>(f)]);
    report.folds.push_back(std::move(assignment));

    IdFoldOutcome outcome =
        run_id_fold(prep, train_positions, /*test_on_walking=*/false, f, {}, config, threads);
    IdFoldResult fold_result;
    fold_result.fold = f;
    fold_result.accuracy = outcome.accuracy;
    fold_result.confusion = std::move(outcome.confusion);
    accuracies.push_back(fold_result.accuracy);
    report.fold_results.push_back(std::move(fold_result));
  }

  const auto [mean, stddev] = mean_and_population_std(accuracies);
  report.mean_accuracy = mean;
  report.std_accuracy = stddev;
  return report;
}

IdReport motion_eval_id(const Dataset& dataset, const PipelineConfig& config, int threads) {
  const Prepared prep = prepare(dataset, config, /*need_walking=*/true, "motion-identification");
  for (std::size_t p = 0; p < prep.pids.size(); ++p) {
    if (prep.rest[p].empty() || prep.walking[p].empty()) {
      throw ProtocolError("motion evaluation: participant " + prep.pids[p] + " is missing " +
                          (prep.rest[p].empty() ? "rest" : "walking") + " sessions");
    }
  }

  std::vector<int> train_positions(static_cast<std::size_t>(prep.rest_count()));
  std::iota(train_positions.begin(), train_positions.end(), 0);

  IdReport report;
  report.protocol = "motion-identification";
  report.config = config;
  report.dataset = dataset.metadata;
  report.class_ids = prep.pids;

  FoldAssignment assignment;
  assignment.fold = 0;
  assignment.train_sessions = prep.rest_indices;
  assignment.test_sessions = prep.walking_indices;
  report.folds.push_back(std::move(assignment));

  IdFoldOutcome outcome = run_id_fold(prep, train_positions, /*test_on_walking=*/true, -1, {},
                                      config, threads);
  IdFoldResult fold_result;
  fold_result.fold = 0;
  fold_result.accuracy = outcome.accuracy;
  fold_result.confusion = std::move(outcome.confusion);
  report.fold_results.push_back(std::move(fold_result));
  report.mean_accuracy = fold_result.accuracy;
  report.std_accuracy = 0.0;
  return report;
}

EnrollmentReport enrollment_curve(const Dataset& dataset, const PipelineConfig& config,
                                  int max_sessions, std::optional<double> seconds_per_session,
                                  int threads) {
  const Prepared prep = prepare(dataset, config, /*need_walking=*/false, "enrollment");
  const int rest = prep.rest_count();
  if (max_sessions < 1 || max_sessions >= rest) {
    throw ProtocolError("enrollment curve: max_sessions (" + std::to_string(max_sessions) +
                        ") must be in [1, " + std::to_string(rest - 1) +
                        "] to keep a held-out test session");
  }

  std::optional<std::size_t> truncate_chunks;
  if (seconds_per_session) {
    if (!(*seconds_per_session > 0.0)) {
      throw InputError("seconds_per_session must be > 0");
    }
    const auto frames = static_cast<std::size_t>(*seconds_per_session * config.sample_rate_hz);
    truncate_chunks = frames / static_cast<std::size_t>(config.chunk_len_frames);
    if (*truncate_chunks == 0) {
      throw ProtocolError("enrollment curve: seconds_per_session yields zero chunks");
    }
  }

  EnrollmentReport report;
  report.config = config;
  report.dataset = dataset.metadata;
  report.participants = prep.pids.size();
  report.seconds_per_session = seconds_per_session;
  report.max_sessions = max_sessions;

  for (int k = 1; k <= max_sessions; ++k) {
    std::vector<double> accuracies;
    for (int f = 0; f < rest; ++f) {
      std::vector<int> train_positions;
      for (int pos = 0; pos < rest && static_cast<int>(train_positions.size()) < k; ++pos) {
        if (pos != f) train_positions.push_back(pos);
      }

      EnrollmentFold fold;
      fold.sessions = k;
      fold.fold.fold = f;
      for (const int pos : train_positions) {
        fold.fold.train_sessions.push_back(prep.rest_indices[static_cast<std::size_t>(pos)]);
      }
      fold.fold.test_sessions.push_back(prep.rest_indices[static_cast<std::size_t>(f)]);
      report.fold_assignments.push_back(std::move(fold));

      const IdFoldOutcome outcome = run_id_fold(prep, train_positions, /*test_on_walking=*/false,
                                                f, truncate_chunks, config, threads);
      accuracies.push_back(outcome.accuracy);
    }
    const auto [mean, stddev] = mean_and_population_std(accuracies);
    report.points.push_back({k, mean, stddev});
  }
  return report;
}

namespace {

ordered_json config_json(const PipelineConfig& config) {
  ordered_json j;
  j["chunk_len_frames"] = config.chunk_len_frames;
  j["head_trim_s"] = config.head_trim_s;
  j["tail_trim_s"] = config.tail_trim_s;
  j["svm_c"] = config.svm_c;
  j["sample_rate_hz"] = config.sample_rate_hz;
  j["rng_seed"] = config.rng_seed;
  j["standardize"] = config.standardize;
  return j;
}

ordered_json dataset_json(const DatasetMetadata& metadata, std::size_t participants) {
  ordered_json j;
  j["provenance"] = metadata.provenance;
  j["sample_rate_hz"] = metadata.sample_rate_hz;
  j["participants"] = participants;
  return j;
}

ordered_json folds_json(const std::vector<FoldAssignment>& folds) {
  ordered_json out = ordered_json::array();
  for (const auto& fold : folds) {
    ordered_json j;
    j["fold"] = fold.fold;
    j["train_sessions"] = fold.train_sessions;
    j["test_sessions"] = fold.test_sessions;
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<double> uniform_grid() {
  std::vector<double> grid(1001);
  for (int i = 0; i <= 1000; ++i) grid[static_cast<std::size_t>(i)] = i / 1000.0;
  return grid;
}

std::string sweep_csv(const SweepResult& sweep) {
  std::string csv = "threshold,far,frr\n";
  for (std::size_t k = 0; k < sweep.thresholds.size(); ++k) {
    csv += format_real(sweep.thresholds[k]);
    csv += ',';
    csv += format_real(sweep.far[k]);
    csv += ',';
    csv += format_real(sweep.frr[k]);
    csv += '\n';
  }
  return csv;
}

std::string confusion_csv(const ConfusionMatrix& confusion) {
  std::string csv = "true_id";
  for (const auto& id : confusion.class_ids) {
    csv += ',';
    csv += id;
  }
  csv += '\n';
  for (std::size_t r = 0; r < confusion.class_ids.size(); ++r) {
    csv += confusion.class_ids[r];
    for (std::size_t c = 0; c < confusion.class_ids.size(); ++c) {
      csv += ',';
      csv += std::to_string(confusion.at(r, c));
    }
    csv += '\n';
  }
  return csv;
}

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

void write_auth_report(const AuthReport& report, const std::filesystem::path& out_dir) {
  ensure_directory(out_dir);

  ordered_json j;
  j["format_version"] = 1;
  j["protocol"] = report.protocol;
  j["config"] = config_json(report.config);
  j["dataset"] = dataset_json(report.dataset, report.participants);
  j["folds"] = folds_json(report.folds);
  ordered_json users = ordered_json::array();
  for (const auto& user : report.per_user) {
    ordered_json u;
    u["participant_id"] = user.participant_id;
    u["eer"] = user.eer;
    u["eer_threshold"] = user.eer_threshold;
    u["genuine_scores"] = user.genuine_count;
    u["impostor_scores"] = user.impostor_count;
    users.push_back(std::move(u));
  }
  j["per_user"] = std::move(users);
  j["mean_user_eer"] = report.mean_user_eer;
  ordered_json pooled;
  pooled["eer"] = report.pooled.eer;
  pooled["eer_threshold"] = report.pooled.eer_threshold;
  pooled["genuine_scores"] = report.pooled_genuine.size();
  pooled["impostor_scores"] = report.pooled_impostor.size();
  j["pooled"] = std::move(pooled);
  j["det_csv"] = "det.csv";

  write_file_atomic(out_dir / "report.json", j.dump(2) + "\n");

  const std::vector<double> grid = uniform_grid();
  const SweepResult det = sweep_thresholds(report.pooled_genuine, report.pooled_impostor, &grid);
  write_file_atomic(out_dir / "det.csv", sweep_csv(det));
}

void write_id_report(const IdReport& report, const std::filesystem::path& out_dir) {
  ensure_directory(out_dir);

  ordered_json j;
  j["format_version"] = 1;
  j["protocol"] = report.protocol;
  j["config"] = config_json(report.config);
  j["dataset"] = dataset_json(report.dataset, report.class_ids.size());
  j["class_ids"] = report.class_ids;
  j["folds"] = folds_json(report.folds);

  ordered_json results = ordered_json::array();
  for (const auto& fold : report.fold_results) {
    std::ostringstream name;
    name << "confusion_fold" << std::setw(2) << std::setfill('0') << fold.fold << ".csv";
    ordered_json r;
    r["fold"] = fold.fold;
    r["accuracy"] = fold.accuracy;
    r["confusion_csv"] = name.str();
    results.push_back(std::move(r));
    write_file_atomic(out_dir / name.str(), confusion_csv(fold.confusion));
  }
  j["fold_results"] = std::move(results);
  j["mean_accuracy"] = report.mean_accuracy;
  j["std_accuracy"] = report.std_accuracy;

  write_file_atomic(out_dir / "report.json", j.dump(2) + "\n");
}

void write_enrollment_report(const EnrollmentReport& report,
                             const std::filesystem::path& out_dir) {
  ensure_directory(out_dir);

  ordered_json j;
  j["format_version"] = 1;
  j["protocol"] = "enrollment-curve";
  j["config"] = config_json(report.config);
  j["dataset"] = dataset_json(report.dataset, report.participants);
  if (report.seconds_per_session) {
    j["seconds_per_session"] = *report.seconds_per_session;
  } else {
    j["seconds_per_session"] = nullptr;
  }
  j["max_sessions"] = report.max_sessions;

  ordered_json points = ordered_json::array();
  for (const auto& point : report.points) {
    ordered_json p;
    p["sessions"] = point.sessions;
    p["mean_accuracy"] = point.mean_accuracy;
    p["std_accuracy"] = point.std_accuracy;
    points.push_back(std::move(p));
  }
  j["points"] = std::move(points);

  ordered_json assignments = ordered_json::array();
  for (const auto& fold : report.fold_assignments) {
    ordered_json a;
    a["sessions"] = fold.sessions;
    a["fold"] = fold.fold.fold;
    a["train_sessions"] = fold.fold.train_sessions;
    a["test_sessions"] = fold.fold.test_sessions;
    assignments.push_back(std::move(a));
  }
  j["fold_assignments"] = std::move(assignments);
  j["curve_csv"] = "curve.csv";

  write_file_atomic(out_dir / "report.json", j.dump(2) + "\n");

  std::string csv = "k,mean,std\n";
  for (const auto& point : report.points) {
    csv += std::to_string(point.sessions);
    csv += ',';
    csv += format_real(point.mean_accuracy);
    csv += ',';
    csv += format_real(point.std_accuracy);
    csv += '\n';
  }
  write_file_atomic(out_dir / "curve.csv", csv);
}

}  // namespace earcap
