#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mist/types.hpp"

namespace mist {

enum class StreamKind {
  GaussianMixture,
  Multimodal,
  Skewed,
  AngularSectors,
  Antipodal,
  Ring,
  HeavyTail,
  NoisyFeature,
  ConceptDrift,
  Pareto,
  LogNormal,
  Exponential,
  OutlierContaminated,
  RandomMeans,
  Csv,
};

std::string to_string(StreamKind kind);
// Accepts the CLI names ("synth-gauss", "angular-sectors", ...).
StreamKind parse_stream_kind(const std::string& name);
std::vector<StreamKind> synthetic_kinds();

struct StreamSpec {
  StreamKind kind = StreamKind::GaussianMixture;
  std::size_t k_classes = 10;
  std::size_t d = 10;
  std::size_t samples_per_class = 1000;
  std::size_t test_per_class = 500;
  std::size_t tasks = 5;
  std::uint64_t seed = 0;
  // Kind-specific parameters; unknown keys are rejected by validate().
  std::map<std::string, double> params;

  double param(const std::string& key) const;
  void validate() const;
};

// Defaults for a kind: class count, dimension, task count, sample counts and parameters.
StreamSpec default_spec(StreamKind kind);
// Parameter names and default values understood by a kind.
std::map<std::string, double> default_params(StreamKind kind);

struct Task {
  std::vector<ClassId> classes;
  std::vector<Sample> train;
  std::vector<Sample> test;
};

struct TaskSchedule {
  std::size_t dim = 0;
  std::vector<FeatureKind> feature_kinds;  // empty means all continuous
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;  // index = class id
  std::vector<Task> tasks;

  std::size_t class_count() const;
  std::size_t train_size() const;
};

TaskSchedule generate(const StreamSpec& spec);

// Checks dimensions, label ranges and per-task class disjointness.
void validate_schedule(const TaskSchedule& schedule);

struct CsvSchema {
  std::vector<std::string> feature_columns;  // empty: every column not named below
  std::string label_column = "label";
  std::optional<std::string> task_column;
  // When present, rows marked "test" form the held-out sets and no random holdout is drawn.
  std::optional<std::string> split_column;
  std::vector<std::string> categorical_columns;
  char delimiter = ',';
  double test_fraction = 0.2;
  std::size_t classes_per_task = 2;
  std::uint64_t seed = 0;
};

TaskSchedule load_csv(const std::string& path, const CsvSchema& schema);

// Writes feature columns, "label", "task" and "split" so that load_csv restores
// the schedule exactly.
void write_csv(const TaskSchedule& schedule, const std::string& path);

}  // namespace mist
