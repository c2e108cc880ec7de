#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "earcap/svm.hpp"
#include "earcap/types.hpp"

namespace earcap {

// (FAR, FRR) at one accept threshold. An impostor score exactly equal to the
// threshold counts as accepted; a genuine score below it counts as rejected.
std::pair<double, double> far_frr_at_threshold(const std::vector<double>& genuine_scores,
                                               const std::vector<double>& impostor_scores,
                                               double threshold);

struct SweepResult {
  std::vector<double> thresholds;  // ascending
  std::vector<double> far;         // non-increasing
  std::vector<double> frr;         // non-decreasing
  double eer = 0.0;
  double eer_threshold = 0.0;
};

// FAR/FRR at every distinct score plus the 0 and 1 anchors (or at the given
// grid), with the EER linearly interpolated at the FAR = FRR crossing.
SweepResult sweep_thresholds(const std::vector<double>& genuine_scores,
                             const std::vector<double>& impostor_scores,
                             const std::vector<double>* grid = nullptr);

struct FoldAssignment {
  int fold = 0;
  std::vector<int> train_sessions;  // session indices, shared across participants
  std::vector<int> test_sessions;
};

struct AuthUserResult {
  std::string participant_id;
  double eer = 0.0;
  double eer_threshold = 0.0;
  std::size_t genuine_count = 0;
  std::size_t impostor_count = 0;
};

struct AuthReport {
  std::string protocol;  // "authentication" or "motion-authentication"
  PipelineConfig config;
  DatasetMetadata dataset;
  std::size_t participants = 0;
  std::vector<FoldAssignment> folds;
  std::vector<AuthUserResult> per_user;
  double mean_user_eer = 0.0;
  SweepResult pooled;  // full-resolution sweep over scores pooled across users
  std::vector<double> pooled_genuine;
  std::vector<double> pooled_impostor;
};

// Rotates every participant's rest sessions through folds of 4 held-out
// sessions (8 train / 4 test with the 12-session schedule), trains one
// accept/reject model per target per fold, and pools the resulting accept
// probabilities into per-user and overall EERs.
AuthReport auth_protocol(const Dataset& dataset, const PipelineConfig& config, int threads = 0);

// The same fold rotation evaluated for a single target; used to derive the
// default accept threshold stored with a trained model.
AuthUserResult auth_eval_single_target(const Dataset& dataset, const PipelineConfig& config,
                                       const std::string& target_id, int threads = 0);

struct ConfusionMatrix {
  std::vector<std::string> class_ids;
  std::vector<std::int64_t> counts;  // row-major, row = true class

  std::int64_t at(std::size_t true_class, std::size_t predicted) const {
    return counts[true_class * class_ids.size() + predicted];
  }
  std::int64_t row_total(std::size_t true_class) const;
  std::int64_t total() const;
  std::int64_t trace() const;
  double accuracy() const;
};

struct IdFoldResult {
  int fold = 0;
  double accuracy = 0.0;
  ConfusionMatrix confusion;
};

struct IdReport {
  std::string protocol;  // "identification" or "motion-identification"
  PipelineConfig config;
  DatasetMetadata dataset;
  std::vector<std::string> class_ids;
  std::vector<FoldAssignment> folds;
  std::vector<IdFoldResult> fold_results;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population stddev over folds
};

// Leave-one-session-out: one fold per rest-session index, training on the
// remaining sessions of every participant.
IdReport id_protocol(const Dataset& dataset, const PipelineConfig& config, int threads = 0);

// Train on all rest sessions, test on all walking sessions.
AuthReport motion_eval_auth(const Dataset& dataset, const PipelineConfig& config, int threads = 0);
IdReport motion_eval_id(const Dataset& dataset, const PipelineConfig& config, int threads = 0);

struct EnrollmentPoint {
  int sessions = 0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
};

struct EnrollmentFold {
  int sessions = 0;
  FoldAssignment fold;
};

struct EnrollmentReport {
  PipelineConfig config;
  DatasetMetadata dataset;
  std::size_t participants = 0;
  std::optional<double> seconds_per_session;
  int max_sessions = 0;
  std::vector<EnrollmentPoint> points;
  std::vector<EnrollmentFold> fold_assignments;
};

// For k = 1..max_sessions, trains identification on the first k training
// sessions of each leave-one-session-out fold (optionally truncated to the
// first seconds_per_session of retained data) and evaluates on the fold's
// held-out session. k = rest_sessions - 1 without truncation reproduces
// id_protocol exactly.
EnrollmentReport enrollment_curve(const Dataset& dataset, const PipelineConfig& config,
                                  int max_sessions,
                                  std::optional<double> seconds_per_session = {},
                                  int threads = 0);

// Report writers. Files are written atomically and are byte-identical for
// identical inputs. det.csv is evaluated on a uniform 0..1 grid with step
// 0.001 (`threshold,far,frr`); confusion matrices land in
// confusion_foldNN.csv; the enrollment curve in curve.csv (`k,mean,std`).
void write_auth_report(const AuthReport& report, const std::filesystem::path& out_dir);
void write_id_report(const IdReport& report, const std::filesystem::path& out_dir);
void write_enrollment_report(const EnrollmentReport& report,
                             const std::filesystem::path& out_dir);

}  // namespace earcap
