#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "earcap/error.hpp"
#include "earcap/eval.hpp"
#include "earcap/fsio.hpp"
#include "earcap/ingest.hpp"
#include "earcap/model_io.hpp"
#include "earcap/svm.hpp"
#include "earcap/synth.hpp"
#include "earcap/types.hpp"

namespace {

namespace fs = std::filesystem;
using namespace earcap;

struct PipelineFlags {
  PipelineConfig config;
  bool no_standardize = false;
  int threads = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--chunk-frames", config.chunk_len_frames, "Frames per chunk")
        ->capture_default_str();
    cmd->add_option("--head-trim", config.head_trim_s, "Seconds trimmed from the start")
        ->capture_default_str();
    cmd->add_option("--tail-trim", config.tail_trim_s, "Seconds trimmed from the end")
        ->capture_default_str();
    cmd->add_option("--c", config.svm_c, "SVM regularization factor C")->capture_default_str();
    cmd->add_option("--seed", config.rng_seed, "RNG seed (training shuffles)")
        ->capture_default_str();
    cmd->add_flag("--no-standardize", no_standardize, "Disable per-channel z-scoring");
    cmd->add_option("--threads", threads, "Worker threads (0 = all cores)")
        ->capture_default_str();
  }

  PipelineConfig resolve(const Dataset& dataset) {
    config.standardize = !no_standardize;
    config.sample_rate_hz = dataset.metadata.sample_rate_hz;
    config.validate();
    return config;
  }
};

fs::path resolve_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("EARCAP_OUT"); env != nullptr && *env != '\0') {
    return env;
  }
  throw InputError("no output directory given; pass --out or set EARCAP_OUT");
}

std::string percent(double fraction) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << fraction * 100.0 << "%";
  return os.str();
}

struct SynthArgs {
  GeneratorParams params;
  std::string params_file;
  std::string out;
};

int cmd_synth(SynthArgs& args, CLI::App* cmd) {
  if (!args.params_file.empty()) {
    GeneratorParams loaded = load_generator_params(args.params_file);
    // Explicit flags win over the params file.
    if (cmd->count("--participants") == 0) args.params.n_participants = loaded.n_participants;
    if (cmd->count("--rest") == 0) args.params.n_rest_sessions = loaded.n_rest_sessions;
    if (cmd->count("--walking") == 0) args.params.n_walking_sessions = loaded.n_walking_sessions;
    if (cmd->count("--duration") == 0) args.params.session_duration_s = loaded.session_duration_s;
    if (cmd->count("--rate") == 0) args.params.sample_rate_hz = loaded.sample_rate_hz;
    if (cmd->count("--baseline") == 0) args.params.baseline = loaded.baseline;
    if (cmd->count("--user-sigma") == 0) args.params.user_sigma = loaded.user_sigma;
    if (cmd->count("--session-sigma") == 0) args.params.session_sigma = loaded.session_sigma;
    if (cmd->count("--frame-sigma") == 0) args.params.frame_sigma = loaded.frame_sigma;
    if (cmd->count("--motion-sigma") == 0) {
      args.params.motion_sigma_extra = loaded.motion_sigma_extra;
    }
    if (cmd->count("--seed") == 0) args.params.rng_seed = loaded.rng_seed;
  }

  const fs::path out = resolve_out_dir(args.out);
  const Dataset dataset = generate_dataset(args.params);
  export_dataset(dataset, out, &args.params);

  const int sessions = args.params.n_rest_sessions + args.params.n_walking_sessions;
  std::cout << "synthetic dataset: " << args.params.n_participants << " participants x "
            << sessions << " sessions -> " << (out / "manifest.json").string() << "\n";
  return 0;
}

int cmd_validate(const std::string& dataset_path) {
  const Dataset dataset = load_dataset(dataset_path, /*strict=*/false);
  const std::vector<Violation> violations = validate_dataset(dataset);
  for (const auto& v : violations) {
    std::cout << (v.severity == Severity::Error ? "error" : "warning") << " " << v.rule << " at "
              << v.location << ": " << v.detail << "\n";
  }
  const std::size_t errors = count_errors(violations);
  const std::size_t warnings = count_warnings(violations);
  std::cout << errors << " violations, " << warnings << " warnings\n";
  return errors > 0 ? 1 : 0;
}

int cmd_eval_auth(const std::string& dataset_path, PipelineFlags& flags,
                  const std::string& out_flag) {
  const fs::path out = resolve_out_dir(out_flag);
  const Dataset dataset = load_dataset(dataset_path);
  const PipelineConfig config = flags.resolve(dataset);

  const AuthReport report = auth_protocol(dataset, config, flags.threads);
  write_auth_report(report, out);
  std::cout << "pooled EER " << percent(report.pooled.eer) << " (threshold "
            << std::fixed << std::setprecision(4) << report.pooled.eer_threshold << ") -> "
            << (out / "report.json").string() << "\n";
  return 0;
}

int cmd_eval_id(const std::string& dataset_path, PipelineFlags& flags,
                const std::string& out_flag) {
  const fs::path out = resolve_out_dir(out_flag);
  const Dataset dataset = load_dataset(dataset_path);
  const PipelineConfig config = flags.resolve(dataset);

  const IdReport report = id_protocol(dataset, config, flags.threads);
  write_id_report(report, out);
  std::cout << "identification accuracy " << percent(report.mean_accuracy) << " +/- "
            << percent(report.std_accuracy) << " over " << report.fold_results.size()
            << " folds -> " << (out / "report.json").string() << "\n";
  return 0;
}

int cmd_eval_motion(const std::string& dataset_path, const std::string& task,
                    PipelineFlags& flags, const std::string& out_flag) {
  const fs::path out = resolve_out_dir(out_flag);
  const Dataset dataset = load_dataset(dataset_path);
  const PipelineConfig config = flags.resolve(dataset);

  if (task == "auth") {
    const AuthReport report = motion_eval_auth(dataset, config, flags.threads);
    write_auth_report(report, out);
    std::cout << "motion EER " << percent(report.pooled.eer) << " -> "
              << (out / "report.json").string() << "\n";
  } else {
    const IdReport report = motion_eval_id(dataset, config, flags.threads);
    write_id_report(report, out);
    std::cout << "motion accuracy " << percent(report.mean_accuracy) << " -> "
              << (out / "report.json").string() << "\n";
  }
  return 0;
}

int cmd_enroll_curve(const std::string& dataset_path, int max_sessions, double seconds,
                     PipelineFlags& flags, const std::string& out_flag) {
  const fs::path out = resolve_out_dir(out_flag);
  const Dataset dataset = load_dataset(dataset_path);
  const PipelineConfig config = flags.resolve(dataset);

  std::optional<double> seconds_per_session;
  if (seconds > 0.0) seconds_per_session = seconds;

  int resolved_max = max_sessions;
  if (resolved_max <= 0) {
    const auto rest =
        dataset.sessions_of(dataset.participant_ids().front(), Activity::Rest).size();
    resolved_max = static_cast<int>(rest) - 1;
  }

  const EnrollmentReport report =
      enrollment_curve(dataset, config, resolved_max, seconds_per_session, flags.threads);
  write_enrollment_report(report, out);
  std::cout << "enrollment curve k=1: " << percent(report.points.front().mean_accuracy)
            << " -> k=" << report.points.back().sessions << ": "
            << percent(report.points.back().mean_accuracy) << " -> "
            << (out / "curve.csv").string() << "\n";
  return 0;
}

FeatureMatrix collect_features(const Dataset& dataset, const PipelineConfig& config,
                               bool include_walking, std::vector<std::string>& labels) {
  FeatureMatrix matrix;
  matrix.cols = static_cast<std::size_t>(kChannelCount);
  for (const auto& pid : dataset.participant_ids()) {
    for (const WearingSession* session : dataset.sessions_of(pid)) {
      if (!include_walking && session->activity == Activity::Walking) continue;
      const WearingSession trimmed =
          trim_session(*session, config.head_trim_s, config.tail_trim_s);
      for (const Chunk& chunk : chunk_session(trimmed, config.chunk_len_frames)) {
        matrix.data.insert(matrix.data.end(), chunk.features.begin(), chunk.features.end());
        labels.push_back(pid);
        ++matrix.rows;
      }
    }
  }
  return matrix;
}

int cmd_train(const std::string& dataset_path, const std::string& task,
              const std::string& target, bool include_walking, PipelineFlags& flags,
              const std::string& model_out) {
  const Dataset dataset = load_dataset(dataset_path);
  const PipelineConfig config = flags.resolve(dataset);

  std::vector<std::string> labels;
  const FeatureMatrix features = collect_features(dataset, config, include_walking, labels);

  ModelTrainConfig train_config;
  train_config.svm.c = config.svm_c;
  train_config.svm.shuffle_seed = config.rng_seed;
  train_config.standardize = config.standardize;

  if (task == "auth") {
    if (target.empty()) throw InputError("--target is required for --task auth");
    const auto ids = dataset.participant_ids();
    if (std::find(ids.begin(), ids.end(), target) == ids.end()) {
      throw InputError("unknown participant \"" + target + "\"");
    }

    std::vector<int> binary(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) binary[i] = labels[i] == target ? 1 : -1;

    AuthModelFile file;
    file.target_id = target;
    file.config = config;
    file.model = train_binary_model(features, binary, train_config);

    // Threshold from the fold evaluation when the schedule supports it.
    try {
      const AuthUserResult eval = auth_eval_single_target(dataset, config, target, flags.threads);
      file.default_threshold = eval.eer_threshold;
      file.eer = eval.eer;
    } catch (const ProtocolError&) {
      file.default_threshold = 0.5;
    }

    save_model(file, model_out);
    std::cout << "authentication model for " << target << " (threshold " << std::fixed
              << std::setprecision(4) << file.default_threshold << ") -> " << model_out << "\n";
  } else {
    IdModelFile file;
    file.config = config;
    file.model = train_ovr(features, labels, train_config, flags.threads);
    save_model(file, model_out);
    std::cout << "identification model for " << file.model.class_ids.size() << " participants -> "
              << model_out << "\n";
  }
  return 0;
}

int cmd_score(const std::string& model_path, const std::string& left_path,
              const std::string& right_path, double threshold_flag) {
  const ModelKind kind = peek_model_kind(model_path);

  const std::string left_csv = read_file(left_path);
  const std::string right_csv = read_file(right_path);
  WearingSession session =
      parse_recording(left_csv, right_csv, "query", 1, Activity::Rest);

  const PipelineConfig config =
      kind == ModelKind::Authentication ? load_auth_model(model_path).config
                                        : load_id_model(model_path).config;
  session = trim_session(session, config.head_trim_s, config.tail_trim_s);
  const std::vector<Chunk> chunks = chunk_session(session, config.chunk_len_frames);
  if (chunks.empty()) {
    throw InsufficientDataError("recording yields no chunks after trimming");
  }

  const std::size_t frames_per_chunk = static_cast<std::size_t>(config.chunk_len_frames);

  if (kind == ModelKind::Authentication) {
    const AuthModelFile file = load_auth_model(model_path);
    const double threshold = threshold_flag >= 0.0 ? threshold_flag : file.default_threshold;
    std::size_t accepts = 0;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      const double p = predict_probability(file.model, chunks[i].features);
      const bool accept = p >= threshold;
      accepts += accept ? 1 : 0;
      std::cout << "chunk " << i << " t=" << std::fixed << std::setprecision(3)
                << session.frames[i * frames_per_chunk].timestamp_s << "s p_accept="
                << std::setprecision(4) << p << " " << (accept ? "accept" : "reject") << "\n";
    }
    const bool majority = accepts * 2 > chunks.size();  // ties reject
    std::cout << "majority: " << (majority ? "accept" : "reject") << " (" << accepts << "/"
              << chunks.size() << " chunks)\n";
  } else {
    const IdModelFile file = load_id_model(model_path);
    std::map<std::string, std::size_t> votes;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      const std::string who = predict_class(file.model, chunks[i].features);
      votes[who] += 1;
      std::cout << "chunk " << i << " t=" << std::fixed << std::setprecision(3)
                << session.frames[i * frames_per_chunk].timestamp_s << "s -> " << who << "\n";
    }
    // Most frequent class; ties break toward the model's class order.
    std::string best;
    std::size_t best_votes = 0;
    for (const auto& id : file.model.class_ids) {
      const auto it = votes.find(id);
      if (it != votes.end() && it->second > best_votes) {
        best = id;
        best_votes = it->second;
      }
    }
    std::cout << "majority: " << best << " (" << best_votes << "/" << chunks.size()
              << " chunks)\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"capacitive ear-canal biometrics: synthesis, ingestion, training, evaluation"};
  app.require_subcommand(1);

  // synth
  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--participants", synth_args.params.n_participants, "Participant count")
      ->capture_default_str();
  synth->add_option("--rest", synth_args.params.n_rest_sessions, "Rest sessions per participant")
      ->capture_default_str();
  synth->add_option("--walking", synth_args.params.n_walking_sessions,
                    "Walking sessions per participant")
      ->capture_default_str();
  synth->add_option("--duration", synth_args.params.session_duration_s, "Session length, seconds")
      ->capture_default_str();
  synth->add_option("--rate", synth_args.params.sample_rate_hz, "Sample rate, Hz")
      ->capture_default_str();
  synth->add_option("--baseline", synth_args.params.baseline, "Baseline device counts")
      ->capture_default_str();
  synth->add_option("--user-sigma", synth_args.params.user_sigma, "Per-user signature spread")
      ->capture_default_str();
  synth->add_option("--session-sigma", synth_args.params.session_sigma, "Per-session offset")
      ->capture_default_str();
  synth->add_option("--frame-sigma", synth_args.params.frame_sigma, "Per-frame noise")
      ->capture_default_str();
  synth->add_option("--motion-sigma", synth_args.params.motion_sigma_extra,
                    "Extra per-frame noise while walking")
      ->capture_default_str();
  synth->add_option("--seed", synth_args.params.rng_seed, "RNG seed")->capture_default_str();
  synth->add_option("--params", synth_args.params_file,
                    "Generator params JSON (explicit flags override)");
  synth->add_option("--out", synth_args.out, "Output directory (or $EARCAP_OUT)");

  // validate
  std::string validate_dataset_path;
  auto* validate = app.add_subcommand("validate", "Check a dataset against its invariants");
  validate->add_option("dataset", validate_dataset_path, "Manifest path or dataset directory")
      ->required();

  // eval-auth
  std::string auth_dataset;
  std::string auth_out;
  PipelineFlags auth_flags;
  auto* eval_auth = app.add_subcommand("eval-auth", "Leave-4-sessions-out authentication EER");
  eval_auth->add_option("dataset", auth_dataset, "Manifest path or dataset directory")
      ->required();
  eval_auth->add_option("--out", auth_out, "Output directory (or $EARCAP_OUT)");
  auth_flags.attach(eval_auth);

  // eval-id
  std::string id_dataset;
  std::string id_out;
  PipelineFlags id_flags;
  auto* eval_id = app.add_subcommand("eval-id", "Leave-one-session-out identification accuracy");
  eval_id->add_option("dataset", id_dataset, "Manifest path or dataset directory")->required();
  eval_id->add_option("--out", id_out, "Output directory (or $EARCAP_OUT)");
  id_flags.attach(eval_id);

  // eval-motion
  std::string motion_dataset;
  std::string motion_out;
  std::string motion_task;
  PipelineFlags motion_flags;
  auto* eval_motion =
      app.add_subcommand("eval-motion", "Train on rest sessions, test on walking sessions");
  eval_motion->add_option("dataset", motion_dataset, "Manifest path or dataset directory")
      ->required();
  eval_motion->add_option("--task", motion_task, "auth or id")
      ->required()
      ->check(CLI::IsMember({"auth", "id"}));
  eval_motion->add_option("--out", motion_out, "Output directory (or $EARCAP_OUT)");
  motion_flags.attach(eval_motion);

  // enroll-curve
  std::string enroll_dataset;
  std::string enroll_out;
  int enroll_max = 0;
  double enroll_seconds = 0.0;
  PipelineFlags enroll_flags;
  auto* enroll = app.add_subcommand("enroll-curve",
                                    "Identification accuracy vs. training session count");
  enroll->add_option("dataset", enroll_dataset, "Manifest path or dataset directory")->required();
  enroll->add_option("--max-sessions", enroll_max,
                     "Largest training session count (default: rest sessions - 1)");
  enroll->add_option("--seconds", enroll_seconds,
                     "Use only the first N seconds of each training session");
  enroll->add_option("--out", enroll_out, "Output directory (or $EARCAP_OUT)");
  enroll_flags.attach(enroll);

  // train
  std::string train_dataset;
  std::string train_task;
  std::string train_target;
  std::string train_out;
  bool train_include_walking = false;
  PipelineFlags train_flags;
  auto* train = app.add_subcommand("train", "Train and persist a model");
  train->add_option("dataset", train_dataset, "Manifest path or dataset directory")->required();
  train->add_option("--task", train_task, "auth or id")
      ->required()
      ->check(CLI::IsMember({"auth", "id"}));
  train->add_option("--target", train_target, "Target participant (auth only)");
  train->add_option("--out", train_out, "Model file path")->required();
  train->add_flag("--include-walking", train_include_walking,
                  "Train on walking sessions as well as rest");
  train_flags.attach(train);

  // score
  std::string score_model;
  std::string score_left;
  std::string score_right;
  double score_threshold = -1.0;
  auto* score = app.add_subcommand("score", "Apply a model to one recording");
  score->add_option("model", score_model, "Model file")->required();
  score->add_option("left", score_left, "Left-ear recording CSV")->required();
  score->add_option("right", score_right, "Right-ear recording CSV")->required();
  score->add_option("--threshold", score_threshold,
                    "Accept threshold override (auth models only)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_args, synth);
    if (validate->parsed()) return cmd_validate(validate_dataset_path);
    if (eval_auth->parsed()) return cmd_eval_auth(auth_dataset, auth_flags, auth_out);
    if (eval_id->parsed()) return cmd_eval_id(id_dataset, id_flags, id_out);
    if (eval_motion->parsed()) {
      return cmd_eval_motion(motion_dataset, motion_task, motion_flags, motion_out);
    }
    if (enroll->parsed()) {
      return cmd_enroll_curve(enroll_dataset, enroll_max, enroll_seconds, enroll_flags,
                              enroll_out);
    }
    if (train->parsed()) {
      return cmd_train(train_dataset, train_task, train_target, train_include_walking,
                       train_flags, train_out);
    }
    if (score->parsed()) return cmd_score(score_model, score_left, score_right, score_threshold);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
