#include <algorithm>
#include <boost/tokenizer.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "mist/error.hpp"
#include "mist/streams.hpp"

namespace mist {

namespace {

std::vector<std::string> split_row(const std::string& line, char delimiter) {
  using Separator = boost::escaped_list_separator<char>;
  boost::tokenizer<Separator> tok(line, Separator('\\', delimiter, '"'));
  std::vector<std::string> out(tok.begin(), tok.end());
  for (auto& field : out) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    field = b == std::string::npos ? std::string() : field.substr(b, e - b + 1);
  }
  return out;
}

std::optional<double> parse_number(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DataError("missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

// Sorts numerically when every value parses as a number, lexicographically otherwise.
void sort_labels(std::vector<std::string>& labels) {
  const bool numeric = std::all_of(labels.begin(), labels.end(), [](const auto& l) { return parse_number(l).has_value(); });
  if (numeric)
    std::sort(labels.begin(), labels.end(), [](const auto& a, const auto& b) { return *parse_number(a) < *parse_number(b); });
  else
    std::sort(labels.begin(), labels.end());
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct Row {
  std::vector<std::string> fields;
  std::size_t line;
};

}  // namespace

TaskSchedule load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  if (!(schema.test_fraction >= 0.0 && schema.test_fraction < 1.0))
    throw ConfigError("test fraction must lie in [0, 1)");
  if (schema.classes_per_task == 0) throw ConfigError("classes per task must be positive");

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    header = split_row(line, schema.delimiter);
    break;
  }
  if (header.empty()) throw DataError("file has no header row", line_no);

  const std::size_t label_col = column_index(header, schema.label_column);
  const std::optional<std::size_t> task_col =
      schema.task_column ? std::optional(column_index(header, *schema.task_column)) : std::nullopt;
  const std::optional<std::size_t> split_col =
      schema.split_column ? std::optional(column_index(header, *schema.split_column)) : std::nullopt;

  std::vector<std::size_t> feature_cols;
  if (schema.feature_columns.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (i != label_col && i != task_col && i != split_col) feature_cols.push_back(i);
  } else {
    for (const auto& name : schema.feature_columns) feature_cols.push_back(column_index(header, name));
  }
  if (feature_cols.empty()) throw DataError("schema selects no feature columns");
  std::set<std::size_t> categorical;
  for (const auto& name : schema.categorical_columns) {
    const std::size_t idx = column_index(header, name);
    if (std::find(feature_cols.begin(), feature_cols.end(), idx) == feature_cols.end())
      throw DataError("categorical column '" + name + "' is not a feature column");
    categorical.insert(idx);
  }

  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_row(line, schema.delimiter);
    if (fields.size() != header.size())
      throw DataError("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()),
                      line_no);
    rows.push_back({std::move(fields), line_no});
  }
  if (rows.empty()) throw DataError("file has no data rows");

  // Category levels per categorical column, sorted for a stable one-hot layout.
  std::map<std::size_t, std::vector<std::string>> levels;
  for (std::size_t col : categorical) {
    std::set<std::string> values;
    for (const auto& r : rows) values.insert(r.fields[col]);
    levels[col] = {values.begin(), values.end()};
  }

  TaskSchedule out;
  for (std::size_t col : feature_cols) {
    if (categorical.count(col)) {
      for (const auto& level : levels[col]) {
        out.feature_names.push_back(header[col] + "=" + level);
        out.feature_kinds.push_back(FeatureKind::Categorical);
      }
    } else {
      out.feature_names.push_back(header[col]);
      out.feature_kinds.push_back(FeatureKind::Continuous);
    }
  }
  out.dim = out.feature_names.size();
  if (categorical.empty()) out.feature_kinds.clear();

  std::vector<std::string> labels;
  {
    std::set<std::string> uniq;
    for (const auto& r : rows) uniq.insert(r.fields[label_col]);
    labels.assign(uniq.begin(), uniq.end());
    sort_labels(labels);
  }
  std::map<std::string, ClassId> label_id;
  for (std::size_t i = 0; i < labels.size(); ++i) label_id[labels[i]] = static_cast<ClassId>(i);
  out.class_names = labels;

  struct Parsed {
    Sample sample;
    long task_key = 0;
    bool test = false;
  };
  std::vector<Parsed> parsed;
  parsed.reserve(rows.size());
  for (const auto& r : rows) {
    Parsed p;
    p.sample.y = label_id.at(r.fields[label_col]);
    p.sample.x.reserve(out.dim);
    for (std::size_t col : feature_cols) {
      if (categorical.count(col)) {
        for (const auto& level : levels[col]) p.sample.x.push_back(r.fields[col] == level ? 1.0 : 0.0);
        continue;
      }
      auto v = parse_number(r.fields[col]);
      if (!v) throw DataError("column '" + header[col] + "' holds a non-numeric value '" + r.fields[col] + "'", r.line);
      p.sample.x.push_back(*v);
    }
    if (task_col) {
      auto t = parse_number(r.fields[*task_col]);
      if (!t || *t != std::floor(*t)) throw DataError("task column must hold integers", r.line);
      p.task_key = static_cast<long>(*t);
    }
    if (split_col) {
      const auto& s = r.fields[*split_col];
      if (s != "train" && s != "test") throw DataError("split column must be 'train' or 'test'", r.line);
      p.test = s == "test";
    }
    parsed.push_back(std::move(p));
  }

  // Task assignment: verbatim from the task column, else label order in fixed-size groups.
  std::map<long, std::size_t> task_index;
  if (task_col) {
    for (const auto& p : parsed) task_index.emplace(p.task_key, 0);
    std::size_t i = 0;
    for (auto& [key, idx] : task_index) idx = i++;
  }
  const std::size_t task_count =
      task_col ? task_index.size() : (labels.size() + schema.classes_per_task - 1) / schema.classes_per_task;
  out.tasks.resize(task_count);
  std::vector<std::set<ClassId>> task_classes(task_count);
  for (auto& p : parsed) {
    const std::size_t t = task_col ? task_index.at(p.task_key) : static_cast<std::size_t>(p.sample.y) / schema.classes_per_task;
    p.sample.task = static_cast<int>(t);
    task_classes[t].insert(p.sample.y);
  }
  std::map<ClassId, std::size_t> owner;
  for (std::size_t t = 0; t < task_count; ++t) {
    for (ClassId c : task_classes[t]) {
      if (auto [it, fresh] = owner.emplace(c, t); !fresh)
        throw DataError("label '" + labels[static_cast<std::size_t>(c)] + "' appears in more than one task");
    }
    out.tasks[t].classes.assign(task_classes[t].begin(), task_classes[t].end());
  }

  // Held-out rows: given by the split column, or a seeded per-class draw.
  std::vector<bool> is_test(parsed.size(), false);
  if (split_col) {
    for (std::size_t i = 0; i < parsed.size(); ++i) is_test[i] = parsed[i].test;
  } else if (schema.test_fraction > 0.0) {
    std::mt19937_64 rng(schema.seed);
    std::map<ClassId, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < parsed.size(); ++i) by_class[parsed[i].sample.y].push_back(i);
    for (auto& [c, idx] : by_class) {
      std::shuffle(idx.begin(), idx.end(), rng);
      const auto n_test = static_cast<std::size_t>(std::llround(schema.test_fraction * static_cast<double>(idx.size())));
      for (std::size_t k = 0; k < n_test; ++k) is_test[idx[k]] = true;
    }
  }
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    auto& task = out.tasks[static_cast<std::size_t>(parsed[i].sample.task)];
    (is_test[i] ? task.test : task.train).push_back(std::move(parsed[i].sample));
  }
  validate_schedule(out);
  return out;
}

void write_csv(const TaskSchedule& schedule, const std::string& path) {
  validate_schedule(schedule);
  std::ofstream os(path);
  if (!os) throw DataError("cannot write '" + path + "'");
  std::vector<std::string> names = schedule.feature_names;
  if (names.size() != schedule.dim) {
    names.clear();
    for (std::size_t j = 0; j < schedule.dim; ++j) names.push_back("f" + std::to_string(j));
  }
  for (const auto& n : names) os << n << ',';
  os << "label,task,split\n";
  auto label = [&](ClassId c) {
    const auto i = static_cast<std::size_t>(c);
    return i < schedule.class_names.size() ? schedule.class_names[i] : std::to_string(c);
  };
  for (std::size_t t = 0; t < schedule.tasks.size(); ++t) {
    const auto& task = schedule.tasks[t];
    for (const auto* part : {&task.train, &task.test}) {
      const char* tag = part == &task.train ? "train" : "test";
      for (const auto& s : *part) {
        for (double v : s.x) os << format_number(v) << ',';
        os << label(s.y) << ',' << t << ',' << tag << '\n';
      }
    }
  }
  if (!os) throw DataError("failed while writing '" + path + "'");
}

}  // namespace mist
