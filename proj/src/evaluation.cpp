#include "mist/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "mist/baselines.hpp"
#include "mist/error.hpp"
#include "mist/split_engine.hpp"

namespace mist {

namespace {

template <typename Enum>
struct EnumName {
  Enum value;
  const char* name;
};

constexpr EnumName<Method> kMethods[] = {
    {Method::MistG, "mist-g"}, {Method::MistK, "mist-k"}, {Method::MistMajority, "mist-majority"},
    {Method::SLDA, "slda"},    {Method::SQDA, "sqda"},    {Method::NCM, "ncm"},
};
constexpr EnumName<CriterionKind> kCriteria[] = {
    {CriterionKind::McDiarmidGapTest, "mcdiarmid"},
    {CriterionKind::GainTest, "gain-test"},
    {CriterionKind::GainTestNoUnion, "gain-test-no-union"},
    {CriterionKind::Hoeffding, "hoeffding"},
    {CriterionKind::Rutkowski, "rutkowski"},
};
constexpr EnumName<InheritanceMode> kInheritance[] = {
    {InheritanceMode::TruncatedGaussian, "truncated-gaussian"},
    {InheritanceMode::SketchQuantile, "sketch-quantile"},
    {InheritanceMode::None, "none"},
};
constexpr EnumName<LeafPredictor> kPredictors[] = {
    {LeafPredictor::GaussianLeaf, "gaussian"},
    {LeafPredictor::SketchLeaf, "sketch"},
    {LeafPredictor::MajorityVote, "majority"},
};
constexpr EnumName<ThresholdPolicy> kThresholds[] = {
    {ThresholdPolicy::MedianMidpoints, "median-midpoints"},
    {ThresholdPolicy::Dense, "dense"},
};

template <typename Enum, std::size_t N>
const char* name_of(const EnumName<Enum> (&table)[N], Enum v) {
  for (const auto& e : table)
    if (e.value == v) return e.name;
  throw InvariantViolation("enum value without a name");
}

template <typename Enum, std::size_t N>
Enum value_of(const EnumName<Enum> (&table)[N], const std::string& name, const char* what) {
  for (const auto& e : table)
    if (name == e.name) return e.value;
  throw ConfigError(std::string("unknown ") + what + " '" + name + "'");
}

// Gini gain on exact counts; an empty side simply contributes nothing.
double exact_gain(const std::map<ClassId, std::pair<double, double>>& counts) {
  std::vector<double> parent, left, right;
  for (const auto& [c, lr] : counts) {
    left.push_back(lr.first);
    right.push_back(lr.second);
    parent.push_back(lr.first + lr.second);
  }
  const double n = std::accumulate(parent.begin(), parent.end(), 0.0);
  const double nl = std::accumulate(left.begin(), left.end(), 0.0);
  const double nr = n - nl;
  if (n <= 0.0) return 0.0;
  double g = gini(parent);
  if (nl > 0.0) g -= nl / n * gini(left);
  if (nr > 0.0) g -= nr / n * gini(right);
  return g;
}

double accuracy_on(const Learner& learner, const std::vector<Sample>& test) {
  if (test.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& s : test)
    if (learner.predict(s.x) == s.y) ++correct;
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << std::fixed << v;
  return os.str();
}

}  // namespace

std::string to_string(Method method) { return name_of(kMethods, method); }
Method parse_method(const std::string& name) { return value_of(kMethods, name, "method"); }

bool is_tree_method(Method method) {
  return method == Method::MistG || method == Method::MistK || method == Method::MistMajority;
}

TreeConfig tree_config_for(Method method, TreeConfig config) {
  switch (method) {
    case Method::MistG:
      config.predictor = LeafPredictor::GaussianLeaf;
      break;
    case Method::MistK:
      config.predictor = LeafPredictor::SketchLeaf;
      break;
    case Method::MistMajority:
      config.predictor = LeafPredictor::MajorityVote;
      break;
    default:
      break;
  }
  return config;
}

std::unique_ptr<Learner> make_learner(Method method, std::size_t dim, TreeConfig config, double shrinkage) {
  switch (method) {
    case Method::SLDA:
      return std::make_unique<GaussianDiscriminant>(DiscriminantKind::SLDA, dim, shrinkage);
    case Method::SQDA:
      return std::make_unique<GaussianDiscriminant>(DiscriminantKind::SQDA, dim, shrinkage);
    case Method::NCM:
      return std::make_unique<GaussianDiscriminant>(DiscriminantKind::NCM, dim, shrinkage);
    default:
      break;
  }
  return std::make_unique<TreeLearner>(to_string(method), dim, tree_config_for(method, std::move(config)));
}

std::vector<StreamKind> stress_suite() {
  std::vector<StreamKind> out;
  for (StreamKind k : synthetic_kinds())
    if (k != StreamKind::GaussianMixture && k != StreamKind::RandomMeans) out.push_back(k);
  return out;
}

std::vector<StreamKind> synthetic_suite() {
  std::vector<StreamKind> out{StreamKind::GaussianMixture};
  for (StreamKind k : stress_suite()) out.push_back(k);
  return out;
}

nlohmann::json to_json(const TreeConfig& c) {
  return {
      {"criterion",
       {{"kind", name_of(kCriteria, c.criterion.kind)},
        {"delta", c.criterion.delta},
        {"tie", c.criterion.tie_threshold},
        {"grace", c.criterion.grace_period},
        {"tie_rule", c.criterion.tie_rule},
        {"check_interval", c.criterion.check_interval},
        {"thresholds", name_of(kThresholds, c.criterion.thresholds)},
        {"dense_grid", c.criterion.dense_grid}}},
      {"inheritance",
       {{"alpha", c.inheritance.alpha},
        {"mode", name_of(kInheritance, c.inheritance.mode)},
        {"clip_lo", c.inheritance.clip_lo},
        {"clip_hi", c.inheritance.clip_hi},
        {"min_mass", c.inheritance.min_mass}}},
      {"predictor", name_of(kPredictors, c.predictor)},
      {"sketch_k", c.sketch_capacity},
      {"beta", c.beta},
      {"eps_s", c.eps_s},
      {"variance_floor", c.variance_floor},
      {"seed", c.seed},
  };
}

TreeConfig tree_config_from_json(const nlohmann::json& j, TreeConfig c) {
  try {
    if (j.contains("criterion")) {
      const auto& k = j.at("criterion");
      if (k.contains("kind")) c.criterion.kind = value_of(kCriteria, k.at("kind").get<std::string>(), "criterion");
      if (k.contains("delta")) c.criterion.delta = k.at("delta").get<double>();
      if (k.contains("tie")) c.criterion.tie_threshold = k.at("tie").get<double>();
      if (k.contains("grace")) c.criterion.grace_period = k.at("grace").get<std::uint64_t>();
      if (k.contains("tie_rule")) c.criterion.tie_rule = k.at("tie_rule").get<bool>();
      if (k.contains("check_interval")) c.criterion.check_interval = k.at("check_interval").get<std::uint64_t>();
      if (k.contains("thresholds"))
        c.criterion.thresholds = value_of(kThresholds, k.at("thresholds").get<std::string>(), "threshold policy");
      if (k.contains("dense_grid")) c.criterion.dense_grid = k.at("dense_grid").get<std::size_t>();
    }
    if (j.contains("inheritance")) {
      const auto& h = j.at("inheritance");
      if (h.contains("alpha")) c.inheritance.alpha = h.at("alpha").get<double>();
      if (h.contains("mode")) c.inheritance.mode = value_of(kInheritance, h.at("mode").get<std::string>(), "inheritance mode");
      if (h.contains("clip_lo")) c.inheritance.clip_lo = h.at("clip_lo").get<double>();
      if (h.contains("clip_hi")) c.inheritance.clip_hi = h.at("clip_hi").get<double>();
      if (h.contains("min_mass")) c.inheritance.min_mass = h.at("min_mass").get<double>();
    }
    if (j.contains("predictor")) c.predictor = value_of(kPredictors, j.at("predictor").get<std::string>(), "predictor");
    if (j.contains("sketch_k")) c.sketch_capacity = j.at("sketch_k").get<std::size_t>();
    if (j.contains("beta")) c.beta = j.at("beta").get<double>();
    if (j.contains("eps_s")) c.eps_s = j.at("eps_s").get<double>();
    if (j.contains("variance_floor")) c.variance_floor = j.at("variance_floor").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad tree config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const StreamSpec& s) {
  return {{"kind", to_string(s.kind)},   {"k_classes", s.k_classes},
          {"d", s.d},                    {"samples_per_class", s.samples_per_class},
          {"test_per_class", s.test_per_class}, {"tasks", s.tasks},
          {"seed", s.seed},              {"params", s.params}};
}

double AuditedSplit::gini_err() const { return std::abs(sketched_gain - exact_gain); }

double RunRecord::final_mean_accuracy() const {
  if (accuracy_matrix.empty()) return 0.0;
  const auto& last = accuracy_matrix.back();
  if (last.empty()) return 0.0;
  return std::accumulate(last.begin(), last.end(), 0.0) / static_cast<double>(last.size());
}

std::optional<double> average_forgetting(const RunRecord& record) {
  const auto& a = record.accuracy_matrix;
  if (a.size() < 2) return std::nullopt;
  const std::size_t last = a.size() - 1;
  double total = 0.0;
  for (std::size_t i = 0; i < last; ++i) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t t = i; t <= last; ++t) peak = std::max(peak, a[t].at(i));
    total += peak - a[last].at(i);
  }
  return total / static_cast<double>(last);
}

nlohmann::json to_json(const RunRecord& r) {
  nlohmann::json diag = nlohmann::json::array();
  for (const auto& p : r.diagnostics_series)
    diag.push_back({{"step", p.step},
                    {"leaves", p.diagnostics.leaves},
                    {"splits", p.diagnostics.cumulative_splits},
                    {"weighted_gini", p.diagnostics.weighted_gini},
                    {"k_local_mean", p.diagnostics.k_local_mean},
                    {"retained_sketch_items", p.diagnostics.retained_sketch_items}});
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : r.split_events)
    events.push_back({{"step", e.step},
                      {"n_leaf", e.n_leaf},
                      {"feature", e.feature},
                      {"threshold", e.threshold},
                      {"sketched_gain", e.sketched_gain},
                      {"exact_gain", e.exact_gain},
                      {"gini_err", e.gini_err()}});
  nlohmann::json j = {
      {"dataset", r.dataset},
      {"method", r.method},
      {"seed", r.seed},
      {"config", r.config},
      {"prequential", {{"steps", r.trace_steps}, {"accuracy", r.prequential_accuracy},
                       {"correct", r.prequential_correct}, {"total", r.prequential_total}}},
      {"accuracy_matrix", r.accuracy_matrix},
      {"final_mean_accuracy", r.final_mean_accuracy()},
      {"diagnostics", diag},
      {"split_events", events},
  };
  if (auto f = average_forgetting(r)) j["forgetting"] = *f;
  else j["forgetting"] = nullptr;
  if (r.error) j["error"] = *r.error;
  return j;
}

RunRecord run_single(Learner& learner, const TaskSchedule& schedule, std::uint64_t seed,
                     const ProtocolOptions& options) {
  if (schedule.tasks.empty()) throw ConfigError("schedule has no tasks");
  RunRecord rec;
  rec.dataset = options.dataset;
  rec.method = learner.name();
  rec.seed = seed;
  const MistTree* tree = learner.tree();
  if (tree) rec.config = to_json(tree->config());

  // Raw samples per leaf, kept only here so split gains can be recomputed exactly.
  std::map<NodeId, std::vector<const Sample*>> shadow;
  const bool audit = tree && options.audit_splits;
  std::uint64_t step = 0;

  try {
    for (std::size_t t = 0; t < schedule.tasks.size(); ++t) {
      for (const Sample& s : schedule.tasks[t].train) {
        NodeId leaf = 0;
        std::size_t events_before = 0;
        if (audit) {
          leaf = tree->route(s.x);
          shadow[leaf].push_back(&s);
          events_before = tree->split_events().size();
        }
        const ClassId pred = learner.test_then_train(s);
        ++step;
        ++rec.prequential_total;
        if (pred == s.y) ++rec.prequential_correct;

        if (audit && tree->split_events().size() > events_before) {
          const SplitEvent& ev = tree->split_events().back();
          std::map<ClassId, std::pair<double, double>> counts;
          for (const Sample* r : shadow[leaf]) {
            auto& lr = counts[r->y];
            (r->x[ev.feature] <= ev.threshold ? lr.first : lr.second) += 1.0;
          }
          rec.split_events.push_back(
              {ev.step, ev.n_leaf, ev.feature, ev.threshold, ev.sketched_gain, exact_gain(counts)});
          shadow.erase(leaf);
        }
        if (options.trace_interval > 0 && step % options.trace_interval == 0) {
          rec.trace_steps.push_back(step);
          rec.prequential_accuracy.push_back(static_cast<double>(rec.prequential_correct) /
                                             static_cast<double>(rec.prequential_total));
        }
        if (tree && options.diagnostics_interval > 0 && step % options.diagnostics_interval == 0)
          rec.diagnostics_series.push_back({step, tree->diagnostics()});
      }
      std::vector<double> row;
      for (std::size_t i = 0; i <= t; ++i) row.push_back(accuracy_on(learner, schedule.tasks[i].test));
      rec.accuracy_matrix.push_back(std::move(row));
    }
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  if (rec.trace_steps.empty() || rec.trace_steps.back() != step) {
    rec.trace_steps.push_back(step);
    rec.prequential_accuracy.push_back(
        rec.prequential_total ? static_cast<double>(rec.prequential_correct) / static_cast<double>(rec.prequential_total)
                              : 0.0);
  }
  if (tree && (rec.diagnostics_series.empty() || rec.diagnostics_series.back().step != step))
    rec.diagnostics_series.push_back({step, tree->diagnostics()});
  return rec;
}

std::vector<RunRecord> run_protocol(const ScheduleProvider& schedules, const LearnerFactory& learners,
                                    const std::vector<std::uint64_t>& seeds, const ProtocolOptions& options) {
  auto one = [&](std::uint64_t seed) {
    try {
      const TaskSchedule schedule = schedules(seed);
      auto learner = learners(schedule, seed);
      return run_single(*learner, schedule, seed, options);
    } catch (const std::exception& e) {
      RunRecord rec;
      rec.dataset = options.dataset;
      rec.seed = seed;
      rec.error = e.what();
      return rec;
    }
  };
  std::vector<RunRecord> out(seeds.size());
  const std::size_t workers = std::max<std::size_t>(1, options.workers);
  for (std::size_t begin = 0; begin < seeds.size(); begin += workers) {
    const std::size_t end = std::min(seeds.size(), begin + workers);
    if (workers == 1) {
      out[begin] = one(seeds[begin]);
      continue;
    }
    std::vector<std::future<RunRecord>> batch;
    for (std::size_t i = begin; i < end; ++i) batch.push_back(std::async(std::launch::async, one, seeds[i]));
    for (std::size_t i = begin; i < end; ++i) out[i] = batch[i - begin].get();
  }
  return out;
}

SketchAuditReport sketch_bound_audit(const std::vector<RunRecord>& records, std::size_t k) {
  if (k == 0) throw ConfigError("sketch capacity must be positive");
  SketchAuditReport rep;
  rep.k = k;
  rep.bound = 4.0 / static_cast<double>(k);
  double sum = 0.0;
  for (const auto& r : records) {
    for (const auto& e : r.split_events) {
      const double err = e.gini_err();
      ++rep.events;
      sum += err;
      rep.max_error = std::max(rep.max_error, err);
      if (err > rep.bound) ++rep.violations;
    }
  }
  rep.vacuous = rep.events == 0;
  rep.mean_error = rep.events ? sum / static_cast<double>(rep.events) : 0.0;
  rep.safety_ratio = rep.max_error > 0.0 ? rep.bound / rep.max_error : std::numeric_limits<double>::infinity();
  return rep;
}

nlohmann::json to_json(const SketchAuditReport& r) {
  nlohmann::json j = {{"k", r.k},
                      {"events", r.events},
                      {"max_gini_err", r.max_error},
                      {"mean_gini_err", r.mean_error},
                      {"bound", r.bound},
                      {"violations", r.violations},
                      {"vacuous", r.vacuous},
                      {"holds", r.holds()}};
  if (std::isfinite(r.safety_ratio)) j["safety_ratio"] = r.safety_ratio;
  else j["safety_ratio"] = nullptr;
  return j;
}

std::vector<SelfClearingRow> self_clearing_study(const std::vector<std::size_t>& k_classes,
                                                 const std::vector<std::uint64_t>& seeds,
                                                 const SelfClearingOptions& options) {
  if (seeds.empty()) throw ConfigError("self-clearing study needs at least one seed");
  std::vector<SelfClearingRow> rows;
  for (std::size_t k : k_classes) {
    StreamSpec spec = options.base;
    spec.k_classes = k;
    // Largest task count not above the base setting that divides K.
    std::size_t tasks = std::min(spec.tasks, k);
    while (tasks > 1 && k % tasks != 0) --tasks;
    spec.tasks = std::max<std::size_t>(tasks, 1);

    SelfClearingRow row;
    row.k_classes = k;
    for (std::uint64_t seed : seeds) {
      spec.seed = seed;
      const TaskSchedule schedule = generate(spec);
      TreeConfig cfg = options.tree;
      cfg.seed = seed;
      TreeLearner learner("mist-g", schedule.dim, cfg);
      for (const auto& task : schedule.tasks)
        for (const auto& s : task.train) learner.learn(s);
      const TreeDiagnostics d = learner.tree()->diagnostics();
      row.leaves += static_cast<double>(d.leaves);
      row.k_local_mean += d.k_local_mean;
    }
    const double n = static_cast<double>(seeds.size());
    row.leaves /= n;
    row.k_local_mean /= n;
    row.reduction = 1.0 - row.k_local_mean / static_cast<double>(k);
    rows.push_back(row);
  }
  return rows;
}

std::string summary_csv_header() {
  return "dataset,method,seed,final_acc,forgetting,leaves,splits,k_local_mean,max_gini_err";
}

std::string summary_csv_row(const RunRecord& r) {
  std::ostringstream os;
  os << r.dataset << ',' << r.method << ',' << r.seed << ',';
  if (r.ok()) os << format_double(r.final_mean_accuracy());
  os << ',';
  if (auto f = average_forgetting(r); f && r.ok()) os << format_double(*f);
  os << ',';
  if (!r.diagnostics_series.empty()) {
    const auto& d = r.diagnostics_series.back().diagnostics;
    os << d.leaves << ',' << d.cumulative_splits << ',' << format_double(d.k_local_mean) << ',';
  } else {
    os << ",,,";
  }
  if (!r.split_events.empty()) {
    double m = 0.0;
    for (const auto& e : r.split_events) m = std::max(m, e.gini_err());
    os << format_double(m);
  }
  return os.str();
}

}  // namespace mist
