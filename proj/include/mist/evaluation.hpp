#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "mist/learner.hpp"
#include "mist/streams.hpp"
#include "mist/tree.hpp"

namespace mist {

enum class Method { MistG, MistK, MistMajority, SLDA, SQDA, NCM };

std::string to_string(Method method);
Method parse_method(const std::string& name);  // "mist-g", "mist-k", "mist-majority", "slda", "sqda", "ncm"
bool is_tree_method(Method method);

// `config` with the leaf predictor that `method` uses. Baselines leave it unchanged.
TreeConfig tree_config_for(Method method, TreeConfig config);

// Builds a learner. Tree methods take the criterion, inheritance and sketch settings
// from `config`; the leaf predictor is set from `method`.
std::unique_ptr<Learner> make_learner(Method method, std::size_t dim, TreeConfig config,
                                      double shrinkage = 1e-4);

// Stress-test kinds: every generator except the Gaussian mixture and random means.
std::vector<StreamKind> stress_suite();
// The stress suite plus the Gaussian mixture.
std::vector<StreamKind> synthetic_suite();

nlohmann::json to_json(const TreeConfig& config);
TreeConfig tree_config_from_json(const nlohmann::json& j, TreeConfig base = {});
nlohmann::json to_json(const StreamSpec& spec);

struct DiagnosticsPoint {
  std::uint64_t step = 0;
  TreeDiagnostics diagnostics;
};

// One split decision, with the gain recomputed from raw shadow counts that only
// the harness keeps.
struct AuditedSplit {
  std::uint64_t step = 0;
  std::uint64_t n_leaf = 0;
  std::size_t feature = 0;
  double threshold = 0.0;
  double sketched_gain = 0.0;
  double exact_gain = 0.0;
  double gini_err() const;
};

struct RunRecord {
  std::string dataset;
  std::string method;
  std::uint64_t seed = 0;
  nlohmann::json config;

  std::vector<std::uint64_t> trace_steps;
  std::vector<double> prequential_accuracy;  // running accuracy at trace_steps
  std::uint64_t prequential_correct = 0;
  std::uint64_t prequential_total = 0;

  // accuracy_matrix[t][i]: accuracy on task i's test set after task t, for i <= t.
  std::vector<std::vector<double>> accuracy_matrix;
  std::vector<DiagnosticsPoint> diagnostics_series;
  std::vector<AuditedSplit> split_events;

  std::optional<std::string> error;  // set when the learner failed and the run was aborted

  bool ok() const { return !error.has_value(); }
  double final_mean_accuracy() const;
};

// Mean over tasks i < T of max_{t >= i} A[t][i] - A[T][i]. Empty with fewer than two tasks.
std::optional<double> average_forgetting(const RunRecord& record);

nlohmann::json to_json(const RunRecord& record);

struct ProtocolOptions {
  std::string dataset = "stream";
  std::uint64_t trace_interval = 100;
  std::uint64_t diagnostics_interval = 500;
  bool audit_splits = true;
  std::size_t workers = 1;
};

using ScheduleProvider = std::function<TaskSchedule(std::uint64_t seed)>;
using LearnerFactory = std::function<std::unique_ptr<Learner>(const TaskSchedule&, std::uint64_t seed)>;

// Streams one schedule through one learner under the test-then-train protocol.
RunRecord run_single(Learner& learner, const TaskSchedule& schedule, std::uint64_t seed,
                     const ProtocolOptions& options = {});

// Runs every seed in isolation. A failure in one seed is recorded in that seed's
// record and does not affect the others.
std::vector<RunRecord> run_protocol(const ScheduleProvider& schedules, const LearnerFactory& learners,
                                    const std::vector<std::uint64_t>& seeds, const ProtocolOptions& options = {});

struct SketchAuditReport {
  std::size_t k = 0;
  std::size_t events = 0;
  double max_error = 0.0;
  double mean_error = 0.0;
  double bound = 0.0;         // 4 / k
  double safety_ratio = 0.0;  // bound / max_error, infinite when max_error is 0
  std::size_t violations = 0;
  bool vacuous = true;

  bool holds() const { return violations == 0; }
};

SketchAuditReport sketch_bound_audit(const std::vector<RunRecord>& records, std::size_t k);
nlohmann::json to_json(const SketchAuditReport& report);

struct SelfClearingRow {
  std::size_t k_classes = 0;
  double leaves = 0.0;
  double k_local_mean = 0.0;
  double reduction = 0.0;
};

struct SelfClearingOptions {
  StreamSpec base = default_spec(StreamKind::RandomMeans);
  TreeConfig tree;
};

// Runs the Gaussian-leaf tree on random-means streams for each class count and
// averages the final diagnostics over seeds.
std::vector<SelfClearingRow> self_clearing_study(const std::vector<std::size_t>& k_classes,
                                                 const std::vector<std::uint64_t>& seeds,
                                                 const SelfClearingOptions& options = {});

// Summary CSV with columns dataset, method, seed, final_acc, forgetting, leaves,
// splits, k_local_mean, max_gini_err. Missing values are written as empty fields.
std::string summary_csv_header();
std::string summary_csv_row(const RunRecord& record);

}  // namespace mist
