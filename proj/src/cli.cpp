#include "mist/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>

#include "mist/error.hpp"
#include "mist/evaluation.hpp"
#include "mist/streams.hpp"
#include "mist/theory.hpp"

namespace mist::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StreamFlags {
  std::string stream;
  std::string csv;
  std::string schema;
  std::optional<std::size_t> k_classes, d, samples_per_class, test_per_class, tasks;
  std::vector<std::string> params;
};

struct TreeFlags {
  std::optional<std::string> criterion, inheritance, thresholds;
  std::optional<double> delta, tie, alpha, beta, eps_s;
  std::optional<std::uint64_t> grace, check_interval;
  std::optional<std::size_t> sketch_k;
};

struct RunFlags {
  std::string config;
  std::string method;
  std::optional<std::size_t> seeds;
  std::string out;
  std::size_t workers = 1;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("'" + path + "' is not valid JSON: " + e.what());
  }
}

json load_config(const RunFlags& run) { return run.config.empty() ? json::object() : read_json_file(run.config); }

std::uint64_t seed_base() {
  const char* env = std::getenv("MIST_SEED_BASE");
  if (!env || !*env) return 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0') throw UsageError("MIST_SEED_BASE must be a non-negative integer");
  return v;
}

std::vector<std::uint64_t> seed_list(std::size_t count) {
  if (count == 0) throw UsageError("--seeds must be positive");
  const std::uint64_t base = seed_base();
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(base + i);
  return out;
}

void add_stream_flags(CLI::App* app, StreamFlags& f, bool with_params = true) {
  app->add_option("--stream", f.stream, "Synthetic stream kind");
  app->add_option("--csv", f.csv, "CSV file to stream instead of a generator")->check(CLI::ExistingFile);
  app->add_option("--schema", f.schema, "JSON CSV schema")->check(CLI::ExistingFile);
  app->add_option("--k-classes", f.k_classes, "Number of classes");
  app->add_option("--d", f.d, "Feature dimension");
  app->add_option("--samples-per-class", f.samples_per_class, "Training samples per class");
  app->add_option("--test-per-class", f.test_per_class, "Held-out samples per class");
  app->add_option("--tasks", f.tasks, "Number of tasks");
  if (with_params) app->add_option("--param", f.params, "Generator parameter as key=value")->take_all();
}

void add_tree_flags(CLI::App* app, TreeFlags& f) {
  app->add_option("--criterion", f.criterion, "mcdiarmid, gain-test, gain-test-no-union, hoeffding, rutkowski");
  app->add_option("--delta", f.delta, "Split confidence parameter");
  app->add_option("--grace", f.grace, "Grace period");
  app->add_option("--tie", f.tie, "Tie threshold");
  app->add_option("--check-interval", f.check_interval, "Samples between split checks");
  app->add_option("--thresholds", f.thresholds, "median-midpoints or dense");
  app->add_option("--alpha", f.alpha, "Inheritance discount");
  app->add_option("--inheritance", f.inheritance, "truncated-gaussian, sketch-quantile or none");
  app->add_option("--sketch-k", f.sketch_k, "Sketch capacity");
  app->add_option("--beta", f.beta, "Sketch likelihood exponent");
  app->add_option("--eps-s", f.eps_s, "Sketch likelihood smoothing");
}

void add_run_flags(CLI::App* app, RunFlags& f, bool with_method = true) {
  app->add_option("--config", f.config, "JSON experiment config")->check(CLI::ExistingFile);
  if (with_method) app->add_option("--method", f.method, "mist-g, mist-k, mist-majority, slda, sqda, ncm");
  app->add_option("--seeds", f.seeds, "Number of seeds");
  app->add_option("--out", f.out, "Output location");
  app->add_option("--workers", f.workers, "Seeds run concurrently")->check(CLI::PositiveNumber);
}

// Flag > config file > default.
TreeConfig resolve_tree(const TreeFlags& f, const json& config) {
  TreeConfig c = config.contains("tree") ? tree_config_from_json(config.at("tree")) : TreeConfig{};
  json patch = json::object();
  if (f.criterion) patch["criterion"]["kind"] = *f.criterion;
  if (f.delta) patch["criterion"]["delta"] = *f.delta;
  if (f.tie) patch["criterion"]["tie"] = *f.tie;
  if (f.grace) patch["criterion"]["grace"] = *f.grace;
  if (f.check_interval) patch["criterion"]["check_interval"] = *f.check_interval;
  if (f.thresholds) patch["criterion"]["thresholds"] = *f.thresholds;
  if (f.alpha) patch["inheritance"]["alpha"] = *f.alpha;
  if (f.inheritance) patch["inheritance"]["mode"] = *f.inheritance;
  if (f.sketch_k) patch["sketch_k"] = *f.sketch_k;
  if (f.beta) patch["beta"] = *f.beta;
  if (f.eps_s) patch["eps_s"] = *f.eps_s;
  return tree_config_from_json(patch, c);
}

StreamSpec resolve_stream(const StreamFlags& f, const json& config) {
  const json file = config.value("stream", json::object());
  std::string kind = f.stream;
  if (kind.empty()) kind = file.value("kind", std::string());
  if (kind.empty()) throw UsageError("a stream kind is required (--stream or --csv)");
  StreamSpec s = default_spec(parse_stream_kind(kind));
  try {
    s.k_classes = f.k_classes.value_or(file.value("k_classes", s.k_classes));
    s.d = f.d.value_or(file.value("d", s.d));
    s.samples_per_class = f.samples_per_class.value_or(file.value("samples_per_class", s.samples_per_class));
    s.test_per_class = f.test_per_class.value_or(file.value("test_per_class", s.test_per_class));
    s.tasks = f.tasks.value_or(file.value("tasks", s.tasks));
    if (file.contains("params"))
      for (const auto& [key, value] : file.at("params").items()) s.params[key] = value.get<double>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("bad stream config: ") + e.what());
  }
  for (const auto& p : f.params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos) throw UsageError("--param expects key=value, got '" + p + "'");
    try {
      std::size_t used = 0;
      const std::string text = p.substr(eq + 1);
      s.params[p.substr(0, eq)] = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
    } catch (const std::logic_error&) {
      throw UsageError("--param value for '" + p.substr(0, eq) + "' is not a number");
    }
  }
  s.validate();
  return s;
}

std::vector<std::string> csv_header(const std::string& path, char delimiter) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, delimiter)) {
    cell.erase(std::remove(cell.begin(), cell.end(), '\r'), cell.end());
    out.push_back(cell);
  }
  return out;
}

CsvSchema resolve_schema(const StreamFlags& f, const json& config) {
  CsvSchema s;
  json j = f.schema.empty() ? config.value("schema", json::object()) : read_json_file(f.schema);
  try {
    if (j.contains("feature_columns")) s.feature_columns = j.at("feature_columns").get<std::vector<std::string>>();
    if (j.contains("label_column")) s.label_column = j.at("label_column").get<std::string>();
    if (j.contains("task_column")) s.task_column = j.at("task_column").get<std::string>();
    if (j.contains("split_column")) s.split_column = j.at("split_column").get<std::string>();
    if (j.contains("categorical_columns")) s.categorical_columns = j.at("categorical_columns").get<std::vector<std::string>>();
    if (j.contains("delimiter")) {
      const auto d = j.at("delimiter").get<std::string>();
      if (d.size() != 1) throw UsageError("schema delimiter must be one character");
      s.delimiter = d[0];
    }
    if (j.contains("test_fraction")) s.test_fraction = j.at("test_fraction").get<double>();
    if (j.contains("classes_per_task")) s.classes_per_task = j.at("classes_per_task").get<std::size_t>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("bad CSV schema: ") + e.what());
  }
  // Files written by `generate` carry task and split columns; use them when no schema names them.
  if (!j.contains("task_column") && !j.contains("split_column")) {
    const auto header = csv_header(f.csv, s.delimiter);
    if (std::find(header.begin(), header.end(), "task") != header.end()) s.task_column = "task";
    if (std::find(header.begin(), header.end(), "split") != header.end()) s.split_column = "split";
  }
  return s;
}

json schema_json(const CsvSchema& s) {
  json j = {{"label_column", s.label_column},
            {"feature_columns", s.feature_columns},
            {"categorical_columns", s.categorical_columns},
            {"delimiter", std::string(1, s.delimiter)},
            {"test_fraction", s.test_fraction},
            {"classes_per_task", s.classes_per_task}};
  if (s.task_column) j["task_column"] = *s.task_column;
  if (s.split_column) j["split_column"] = *s.split_column;
  return j;
}

// A data source resolved from flags: either a generator spec or a CSV file.
struct Source {
  std::string name;
  std::optional<StreamSpec> spec;
  std::string csv;
  CsvSchema schema;

  TaskSchedule schedule(std::uint64_t seed) const {
    if (spec) {
      StreamSpec s = *spec;
      s.seed = seed;
      return generate(s);
    }
    CsvSchema sc = schema;
    sc.seed = seed;
    return load_csv(csv, sc);
  }

  json describe() const {
    if (spec) return to_json(*spec);
    return {{"kind", "csv"}, {"path", csv}, {"schema", schema_json(schema)}};
  }
};

Source resolve_source(const StreamFlags& f, const json& config) {
  Source src;
  if (!f.csv.empty()) {
    if (!f.stream.empty() && f.stream != "csv") throw UsageError("--stream and --csv are mutually exclusive");
    src.csv = f.csv;
    src.schema = resolve_schema(f, config);
    src.name = fs::path(f.csv).stem().string();
    // Load once up front so malformed files fail as data errors rather than per-seed run failures.
    (void)load_csv(src.csv, src.schema);
    return src;
  }
  src.spec = resolve_stream(f, config);
  src.name = to_string(src.spec->kind);
  return src;
}

Method resolve_method(const RunFlags& run, const json& config, const char* fallback = "mist-g") {
  if (!run.method.empty()) return parse_method(run.method);
  return parse_method(config.value("method", std::string(fallback)));
}

std::size_t resolve_seed_count(const RunFlags& run, const json& config) {
  if (run.seeds) return *run.seeds;
  return config.value("seeds", std::size_t{5});
}

std::vector<RunRecord> run_source(const Source& src, Method method, const TreeConfig& tree,
                                  const std::vector<std::uint64_t>& seeds, std::size_t workers) {
  ProtocolOptions opt;
  opt.dataset = src.name;
  opt.workers = workers;
  auto records = run_protocol([&](std::uint64_t seed) { return src.schedule(seed); },
                              [&](const TaskSchedule& schedule, std::uint64_t seed) {
                                TreeConfig cfg = tree;
                                cfg.seed = seed;
                                cfg.feature_kinds = schedule.feature_kinds;
                                return make_learner(method, schedule.dim, cfg);
                              },
                              seeds, opt);
  for (auto& r : records) {
    TreeConfig cfg = tree_config_for(method, tree);
    cfg.seed = r.seed;
    r.method = to_string(method);
    r.config = {{"method", to_string(method)}, {"seed", r.seed}, {"stream", src.describe()}, {"tree", to_json(cfg)}};
  }
  return records;
}

std::string fixed(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << std::fixed << v;
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw UsageError("cannot write '" + path.string() + "'");
  os << text;
}

std::optional<std::string> first_error(const std::vector<RunRecord>& records) {
  for (const auto& r : records)
    if (r.error) return "seed " + std::to_string(r.seed) + ": " + *r.error;
  return std::nullopt;
}

int cmd_bench(const StreamFlags& sf, const TreeFlags& tf, const RunFlags& rf, std::ostream& out) {
  const json config = load_config(rf);
  const Source src = resolve_source(sf, config);
  const Method method = resolve_method(rf, config);
  const TreeConfig tree = resolve_tree(tf, config);
  const auto seeds = seed_list(resolve_seed_count(rf, config));
  const auto records = run_source(src, method, tree, seeds, rf.workers);

  const fs::path dir = rf.out.empty() ? fs::path("results") : fs::path(rf.out);
  fs::create_directories(dir);
  const fs::path summary = dir / "summary.csv";
  const bool fresh = !fs::exists(summary) || fs::file_size(summary) == 0;
  std::ofstream csv(summary, std::ios::app);
  if (!csv) throw UsageError("cannot write '" + summary.string() + "'");
  if (fresh) csv << summary_csv_header() << '\n';
  out << summary_csv_header() << '\n';
  for (const auto& r : records) {
    const std::string row = summary_csv_row(r);
    csv << row << '\n';
    out << row << '\n';
    write_text(dir / (r.dataset + "_" + r.method + "_seed" + std::to_string(r.seed) + ".json"), to_json(r).dump(2) + "\n");
  }
  if (auto e = first_error(records)) throw InvariantViolation("run failed, " + *e);
  return kExitOk;
}

int cmd_generate(const StreamFlags& sf, const RunFlags& rf, std::uint64_t seed, std::ostream& out) {
  const json config = load_config(rf);
  if (!sf.csv.empty()) throw UsageError("generate takes --stream, not --csv");
  if (rf.out.empty()) throw UsageError("generate needs --out <file.csv>");
  StreamSpec spec = resolve_stream(sf, config);
  spec.seed = seed_base() + seed;
  const fs::path path(rf.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const TaskSchedule schedule = generate(spec);
  write_csv(schedule, rf.out);
  out << json{{"written", rf.out}, {"rows", schedule.train_size()}, {"stream", to_json(spec)}}.dump() << '\n';
  return kExitOk;
}

// Applies one ablation value to the method and tree configuration.
void apply_ablation(const std::string& param, const std::string& value, Method& method, TreeConfig& tree) {
  auto number = [&]() {
    try {
      std::size_t used = 0;
      const double v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      return v;
    } catch (const std::logic_error&) {
      throw UsageError("ablation value '" + value + "' is not a number");
    }
  };
  json patch = json::object();
  if (param == "alpha") patch["inheritance"]["alpha"] = number();
  else if (param == "delta") patch["criterion"]["delta"] = number();
  else if (param == "tie") patch["criterion"]["tie"] = number();
  else if (param == "grace") patch["criterion"]["grace"] = static_cast<std::uint64_t>(number());
  else if (param == "sketch-k") patch["sketch_k"] = static_cast<std::size_t>(number());
  else if (param == "beta") patch["beta"] = number();
  else if (param == "eps-s") patch["eps_s"] = number();
  else if (param == "criterion") patch["criterion"]["kind"] = value;
  else if (param == "inheritance") patch["inheritance"]["mode"] = value;
  else if (param == "thresholds") patch["criterion"]["thresholds"] = value;
  else if (param == "method") method = parse_method(value);
  else throw UsageError("unknown ablation parameter '" + param + "'");
  tree = tree_config_from_json(patch, tree);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<StreamKind> resolve_kinds(const std::string& text, std::vector<StreamKind> fallback) {
  if (text.empty()) return fallback;
  if (text == "stress") return stress_suite();
  if (text == "suite" || text == "synthetic") return synthetic_suite();
  std::vector<StreamKind> out;
  for (const auto& name : split_list(text)) out.push_back(parse_stream_kind(name));
  return out;
}

int cmd_ablate(const StreamFlags& sf, const TreeFlags& tf, const RunFlags& rf, const std::string& param,
               const std::string& values, std::ostream& out) {
  const json config = load_config(rf);
  const auto list = split_list(values);
  if (list.empty()) throw UsageError("--values needs at least one value");
  const auto seeds = seed_list(resolve_seed_count(rf, config));
  const auto kinds = resolve_kinds(sf.stream, stress_suite());

  std::ostringstream table;
  table << "param,value,dataset,method,mean_acc,sd_acc,mean_leaves\n";
  for (const auto& value : list) {
    Method method = resolve_method(rf, config);
    TreeConfig tree = resolve_tree(tf, config);
    apply_ablation(param, value, method, tree);
    double suite_acc = 0.0, suite_leaves = 0.0;
    for (StreamKind kind : kinds) {
      StreamFlags one = sf;
      one.stream = to_string(kind);
      const Source src = resolve_source(one, json::object());
      const auto records = run_source(src, method, tree, seeds, rf.workers);
      if (auto e = first_error(records)) throw InvariantViolation("run failed, " + *e);
      double sum = 0.0, sum_sq = 0.0, leaves = 0.0;
      for (const auto& r : records) {
        const double a = r.final_mean_accuracy();
        sum += a;
        sum_sq += a * a;
        if (!r.diagnostics_series.empty()) leaves += static_cast<double>(r.diagnostics_series.back().diagnostics.leaves);
      }
      const double n = static_cast<double>(records.size());
      const double mean = sum / n;
      const double sd = n > 1 ? std::sqrt(std::max(0.0, (sum_sq - n * mean * mean) / (n - 1))) : 0.0;
      table << param << ',' << value << ',' << src.name << ',' << to_string(method) << ',' << fixed(mean) << ','
            << fixed(sd) << ',' << fixed(leaves / n) << '\n';
      suite_acc += mean;
      suite_leaves += leaves / n;
    }
    const double k = static_cast<double>(kinds.size());
    table << param << ',' << value << ",suite-mean," << to_string(method) << ',' << fixed(suite_acc / k) << ",,"
          << fixed(suite_leaves / k) << '\n';
  }
  out << table.str();
  if (!rf.out.empty()) write_text(rf.out, table.str());
  return kExitOk;
}

int cmd_audit(const StreamFlags& sf, const TreeFlags& tf, const RunFlags& rf, std::ostream& out) {
  const json config = load_config(rf);
  const TreeConfig tree = resolve_tree(tf, config);
  const Method method = resolve_method(rf, config);
  if (!is_tree_method(method)) throw UsageError("audit-sketch needs a tree method");
  const auto seeds = seed_list(resolve_seed_count(rf, config));
  const auto kinds = resolve_kinds(sf.stream, {StreamKind::Pareto, StreamKind::LogNormal, StreamKind::Exponential,
                                               StreamKind::OutlierContaminated});
  json report = {{"sketch_k", tree.sketch_capacity}, {"method", to_string(method)}, {"streams", json::object()}};
  std::vector<RunRecord> all;
  for (StreamKind kind : kinds) {
    StreamFlags one = sf;
    one.stream = to_string(kind);
    const Source src = resolve_source(one, json::object());
    auto records = run_source(src, method, tree, seeds, rf.workers);
    if (auto e = first_error(records)) throw InvariantViolation("run failed, " + *e);
    report["streams"][src.name] = to_json(sketch_bound_audit(records, tree.sketch_capacity));
    all.insert(all.end(), records.begin(), records.end());
  }
  report["overall"] = to_json(sketch_bound_audit(all, tree.sketch_capacity));
  const std::string text = report.dump(2) + "\n";
  out << text;
  if (!rf.out.empty()) write_text(rf.out, text);
  return kExitOk;
}

struct TheoryFlags {
  std::size_t max_n = 12;
  std::size_t trials = 10000;
  std::size_t max_k = 5;
  std::size_t random_max_n = 50;
  std::size_t tightness_n = 5000;
  std::size_t draws = 100000;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_theory(const TheoryFlags& f, std::ostream& out) {
  const std::uint64_t seed = seed_base() + f.seed;
  const auto binary = theory::exhaustive_binary_sensitivity(f.max_n);
  const auto random = theory::random_multiclass_sensitivity(f.trials, f.max_k, f.random_max_n, seed);
  const auto cross = theory::exhaustive_cross_routing(f.max_n);
  const auto tight = theory::tightness(f.tightness_n);
  const auto moments = theory::truncated_moment_check();
  json dirichlet = json::array();
  bool dirichlet_ok = true;
  for (double s0 : {4.0, 20.0, 100.0}) {
    const auto c = theory::dirichlet_variance_check(s0, f.draws, seed + static_cast<std::uint64_t>(s0));
    dirichlet_ok = dirichlet_ok && c.max_variance <= c.bound * 1.05;
    dirichlet.push_back(theory::to_json(c));
  }
  const bool tight_ok = std::abs(tight.measured - tight.formula) <= 1e-12 * std::max(1.0, tight.formula);
  const bool moments_ok = moments.max_mean_error <= 1e-8 && moments.max_variance_error <= 1e-8 && moments.variance_in_range;
  json report = {
      {"sensitivity_binary", theory::to_json(binary)},
      {"sensitivity_random", theory::to_json(random)},
      {"case_b", theory::to_json(cross)},
      {"tightness", theory::to_json(tight)},
      {"truncated_moments", theory::to_json(moments)},
      {"dirichlet", dirichlet},
  };
  report["pass"] = {{"sensitivity_binary", binary.violations == 0},
                    {"sensitivity_random", random.violations == 0},
                    {"case_b", cross.violations == 0},
                    {"tightness", tight_ok},
                    {"truncated_moments", moments_ok},
                    {"dirichlet", dirichlet_ok}};
  const std::string text = report.dump(2) + "\n";
  out << text;
  if (!f.out.empty()) write_text(f.out, text);
  for (const auto& [name, ok] : report["pass"].items())
    if (!ok.get<bool>()) throw InvariantViolation("theory check failed: " + name);
  return kExitOk;
}

int cmd_self_clearing(const std::vector<std::size_t>& ks, const TreeFlags& tf, const RunFlags& rf, std::ostream& out) {
  const json config = load_config(rf);
  SelfClearingOptions opt;
  opt.tree = resolve_tree(tf, config);
  const auto rows = self_clearing_study(ks, seed_list(resolve_seed_count(rf, config)), opt);
  std::ostringstream table;
  table << "k_classes,leaves,k_local_mean,reduction\n";
  for (const auto& r : rows)
    table << r.k_classes << ',' << fixed(r.leaves) << ',' << fixed(r.k_local_mean) << ',' << fixed(r.reduction) << '\n';
  out << table.str();
  if (!rf.out.empty()) write_text(rf.out, table.str());
  return kExitOk;
}

void report_error(std::ostream& err, const char* kind, const std::string& message) {
  err << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Streaming decision trees for class-incremental learning", "mist"};
  app.require_subcommand(1);

  StreamFlags sf;
  TreeFlags tf;
  RunFlags rf;

  auto* bench = app.add_subcommand("bench", "Run the test-then-train protocol and write run records");
  add_stream_flags(bench, sf);
  add_tree_flags(bench, tf);
  add_run_flags(bench, rf);

  std::uint64_t gen_seed = 0;
  auto* gen = app.add_subcommand("generate", "Write a synthetic stream to CSV");
  add_stream_flags(gen, sf);
  gen->add_option("--config", rf.config, "JSON experiment config")->check(CLI::ExistingFile);
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--out", rf.out, "Output CSV path");

  std::string param, values;
  auto* ablate = app.add_subcommand("ablate", "Sweep one setting over a set of streams");
  // Here --param names the swept setting; generator overrides come from --config.
  add_stream_flags(ablate, sf, false);
  add_tree_flags(ablate, tf);
  add_run_flags(ablate, rf);
  ablate->add_option("--param", param, "alpha, delta, tie, grace, sketch-k, beta, eps-s, criterion, inheritance, thresholds, method")
      ->required();
  ablate->add_option("--values", values, "Comma-separated values")->required();

  auto* audit = app.add_subcommand("audit-sketch", "Compare sketched and exact split gains");
  add_stream_flags(audit, sf);
  add_tree_flags(audit, tf);
  add_run_flags(audit, rf);

  TheoryFlags th;
  auto* theory_cmd = app.add_subcommand("verify-theory", "Brute-force checks of the split and inheritance bounds");
  theory_cmd->add_option("--max-n", th.max_n, "Largest n for exhaustive searches")->check(CLI::Range(2, 40));
  theory_cmd->add_option("--trials", th.trials, "Random multi-class trials");
  theory_cmd->add_option("--max-k", th.max_k, "Largest class count in random trials")->check(CLI::Range(2, 50));
  theory_cmd->add_option("--random-max-n", th.random_max_n, "Largest n in random trials")->check(CLI::Range(2, 500));
  theory_cmd->add_option("--tightness-n", th.tightness_n, "n for the tightness construction")->check(CLI::Range(4, 10000000));
  theory_cmd->add_option("--draws", th.draws, "Monte-Carlo draws per Dirichlet prior")->check(CLI::Range(2, 100000000));
  theory_cmd->add_option("--seed", th.seed, "Random seed");
  theory_cmd->add_option("--out", th.out, "Output JSON path");

  std::vector<std::size_t> clearing_ks{10, 25, 50};
  auto* clearing = app.add_subcommand("self-clearing", "Local class count study on random-means streams");
  clearing->add_option("--k-classes", clearing_ks, "Class counts")->delimiter(',');
  add_tree_flags(clearing, tf);
  add_run_flags(clearing, rf, false);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", e.what());
    return kExitUsage;
  }

  try {
    if (bench->parsed()) return cmd_bench(sf, tf, rf, out);
    if (gen->parsed()) return cmd_generate(sf, rf, gen_seed, out);
    if (ablate->parsed()) return cmd_ablate(sf, tf, rf, param, values, out);
    if (audit->parsed()) return cmd_audit(sf, tf, rf, out);
    if (theory_cmd->parsed()) return cmd_theory(th, out);
    if (clearing->parsed()) return cmd_self_clearing(clearing_ks, tf, rf, out);
    report_error(err, "usage", "no subcommand");
    return kExitUsage;
  } catch (const UsageError& e) {
    report_error(err, "usage", e.what());
    return kExitUsage;
  } catch (const ConfigError& e) {
    report_error(err, "usage", e.what());
    return kExitUsage;
  } catch (const DataError& e) {
    report_error(err, "data", e.what());
    return kExitData;
  } catch (const InvalidInput& e) {
    report_error(err, "data", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    report_error(err, "internal", e.what());
    return kExitInternal;
  }
}

}  // namespace mist::cli
