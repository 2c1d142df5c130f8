#include <gtest/gtest.h>

#include <unistd.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "mist/error.hpp"
#include "mist/streams.hpp"

using namespace mist;
namespace fs = std::filesystem;

namespace {

StreamSpec small(StreamKind kind, std::size_t per_class = 200) {
  StreamSpec s = default_spec(kind);
  s.samples_per_class = per_class;
  s.test_per_class = 20;
  return s;
}

std::vector<const Sample*> class_samples(const TaskSchedule& s, ClassId c) {
  std::vector<const Sample*> out;
  for (const auto& t : s.tasks)
    for (const auto& smp : t.train)
      if (smp.y == c) out.push_back(&smp);
  return out;
}

struct Moments4 {
  double mean, var, skew, excess_kurtosis;
};

Moments4 moments(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double mean = 0;
  for (double x : v) mean += x;
  mean /= n;
  double m2 = 0, m3 = 0, m4 = 0;
  for (double x : v) {
    const double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  return {mean, m2, m3 / std::pow(m2, 1.5), m4 / (m2 * m2) - 3.0};
}

std::vector<double> feature(const std::vector<const Sample*>& xs, std::size_t j) {
  std::vector<double> out;
  for (const auto* s : xs) out.push_back(s->x[j]);
  return out;
}

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("mist_streams_" + std::to_string(::getpid()))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name, const std::string& content = "") const {
    const auto p = path_ / name;
    if (!content.empty()) std::ofstream(p) << content;
    return p.string();
  }

 private:
  fs::path path_;
};

}  // namespace

TEST(Streams, KindNamesRoundTrip) {
  for (StreamKind k : synthetic_kinds()) EXPECT_EQ(parse_stream_kind(to_string(k)), k);
  EXPECT_EQ(synthetic_kinds().size(), 14u);
  EXPECT_THROW(parse_stream_kind("nope"), ConfigError);
}

TEST(Streams, StatedShapes) {
  auto check = [](StreamKind k, std::size_t K, std::size_t d) {
    const auto s = default_spec(k);
    EXPECT_EQ(s.k_classes, K) << to_string(k);
    EXPECT_EQ(s.d, d) << to_string(k);
  };
  check(StreamKind::Multimodal, 8, 10);
  check(StreamKind::AngularSectors, 4, 8);
  check(StreamKind::Antipodal, 8, 10);
  check(StreamKind::Ring, 6, 8);
  check(StreamKind::NoisyFeature, 8, 20);
  check(StreamKind::Pareto, 6, 10);
  check(StreamKind::OutlierContaminated, 6, 10);
  check(StreamKind::RandomMeans, 50, 10);
  EXPECT_EQ(default_spec(StreamKind::Pareto).samples_per_class, 2000u);
  EXPECT_EQ(default_spec(StreamKind::Multimodal).param("modes"), 3.0);
  EXPECT_EQ(default_spec(StreamKind::HeavyTail).param("nu"), 2.0);
  EXPECT_EQ(default_spec(StreamKind::ConceptDrift).param("drift"), 1.5);
  EXPECT_EQ(default_spec(StreamKind::Pareto).param("shape"), 1.5);
  EXPECT_EQ(default_spec(StreamKind::OutlierContaminated).param("outlier_scale"), 50.0);
  EXPECT_EQ(default_spec(StreamKind::RandomMeans).param("sigma"), 0.3);
}

TEST(Streams, ScheduleInvariantsForEveryKind) {
  for (StreamKind k : synthetic_kinds()) {
    StreamSpec spec = small(k, 50);
    const TaskSchedule s = generate(spec);
    EXPECT_NO_THROW(validate_schedule(s)) << to_string(k);
    EXPECT_EQ(s.tasks.size(), spec.tasks);
    EXPECT_EQ(s.class_count(), spec.k_classes);
    EXPECT_EQ(s.train_size(), spec.k_classes * spec.samples_per_class);
    std::set<ClassId> seen;
    for (std::size_t t = 0; t < s.tasks.size(); ++t) {
      const auto before = seen.size();
      for (ClassId c : s.tasks[t].classes) EXPECT_TRUE(seen.insert(c).second);
      EXPECT_GT(seen.size(), before);  // the label space only grows
      for (const auto& smp : s.tasks[t].train) {
        EXPECT_EQ(smp.task, static_cast<int>(t));
        for (double v : smp.x) ASSERT_TRUE(std::isfinite(v)) << to_string(k);
      }
      EXPECT_EQ(s.tasks[t].test.size(), s.tasks[t].classes.size() * spec.test_per_class);
    }
  }
}

TEST(Streams, DeterministicPerSeed) {
  for (StreamKind k : synthetic_kinds()) {
    StreamSpec spec = small(k, 30);
    spec.seed = 11;
    const auto a = generate(spec), b = generate(spec);
    ASSERT_EQ(a.tasks.size(), b.tasks.size());
    for (std::size_t t = 0; t < a.tasks.size(); ++t)
      for (std::size_t i = 0; i < a.tasks[t].train.size(); ++i) {
        ASSERT_EQ(a.tasks[t].train[i].x, b.tasks[t].train[i].x);
        ASSERT_EQ(a.tasks[t].train[i].y, b.tasks[t].train[i].y);
      }
    spec.seed = 12;
    EXPECT_NE(generate(spec).tasks[0].train[0].x, a.tasks[0].train[0].x) << to_string(k);
  }
}

TEST(Streams, WithinTaskOrderIsInterleaved) {
  const auto s = generate(small(StreamKind::GaussianMixture, 500));
  const auto& train = s.tasks[0].train;
  std::size_t switches = 0;
  for (std::size_t i = 1; i < train.size(); ++i) switches += train[i].y != train[i - 1].y;
  EXPECT_GT(switches, train.size() / 4);
}

TEST(Streams, SpecValidation) {
  StreamSpec s = default_spec(StreamKind::GaussianMixture);
  s.tasks = 3;
  EXPECT_THROW(generate(s), ConfigError);
  s = default_spec(StreamKind::GaussianMixture);
  s.params["bogus"] = 1.0;
  EXPECT_THROW(generate(s), ConfigError);
  s = default_spec(StreamKind::Pareto);
  s.params["feature_decay"] = 0.0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = default_spec(StreamKind::GaussianMixture);
  s.params["sigma"] = INFINITY;
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_THROW(generate(StreamSpec{StreamKind::Csv}), ConfigError);
  EXPECT_THROW(default_spec(StreamKind::Ring).param("nope"), ConfigError);
}

TEST(Streams, AngularSectorsShareMeanAndCovariance) {
  StreamSpec spec = small(StreamKind::AngularSectors, 10000);
  const auto s = generate(spec);
  std::vector<std::array<double, 3>> covs;
  for (ClassId c = 0; c < 4; ++c) {
    const auto xs = class_samples(s, c);
    const auto m0 = moments(feature(xs, 0)), m1 = moments(feature(xs, 1));
    EXPECT_NEAR(m0.mean, 0.0, 0.1) << c;
    EXPECT_NEAR(m1.mean, 0.0, 0.1) << c;
    double cross = 0;
    for (const auto* x : xs) cross += (x->x[0] - m0.mean) * (x->x[1] - m1.mean);
    covs.push_back({m0.var, m1.var, cross / static_cast<double>(xs.size())});
  }
  for (std::size_t c = 1; c < covs.size(); ++c)
    for (int e = 0; e < 3; ++e) EXPECT_NEAR(covs[c][e], covs[0][e], 0.25) << c << " " << e;
}

TEST(Streams, ConceptDriftShiftsFeatureZeroPerTask) {
  StreamSpec drift = small(StreamKind::ConceptDrift, 100);
  StreamSpec none = drift;
  none.params["drift"] = 0.0;
  const auto a = generate(drift), b = generate(none);
  for (std::size_t t = 0; t < a.tasks.size(); ++t)
    for (std::size_t i = 0; i < a.tasks[t].train.size(); ++i) {
      ASSERT_NEAR(a.tasks[t].train[i].x[0] - b.tasks[t].train[i].x[0], 1.5 * static_cast<double>(t), 1e-9);
      ASSERT_EQ(a.tasks[t].train[i].x[1], b.tasks[t].train[i].x[1]);
    }
}

TEST(Streams, HeavyTailKurtosis) {
  const auto s = generate(small(StreamKind::HeavyTail, 10000));
  const auto m = moments(feature(class_samples(s, 0), 0));
  EXPECT_GT(m.excess_kurtosis, 6.0);
}

TEST(Streams, LogNormalPositiveSkew) {
  const auto s = generate(small(StreamKind::LogNormal, 10000));
  for (std::size_t j = 0; j < 3; ++j) EXPECT_GT(moments(feature(class_samples(s, 1), j)).skew, 0.0);
}

TEST(Streams, ParetoIsLogCompressed) {
  const auto s = generate(small(StreamKind::Pareto, 10000));
  const auto xs = feature(class_samples(s, 0), 0);
  const double lo = *std::min_element(xs.begin(), xs.end());
  const double hi = *std::max_element(xs.begin(), xs.end());
  // log1p of a Pareto(1.5) draw: at least log 2 above the location, and rarely above 10.
  EXPECT_LT(hi - lo, 15.0);
  EXPECT_GT(moments(xs).skew, 0.0);
}

TEST(Streams, OutlierContaminationFraction) {
  const auto spec = small(StreamKind::OutlierContaminated, 10000);
  const auto s = generate(spec);
  for (ClassId c : {0, 3}) {
    const auto xs = class_samples(s, c);
    std::vector<double> centre(spec.d);
    for (std::size_t j = 0; j < spec.d; ++j) {
      auto f = feature(xs, j);
      std::nth_element(f.begin(), f.begin() + f.size() / 2, f.end());
      centre[j] = f[f.size() / 2];
    }
    std::size_t outliers = 0;
    for (const auto* x : xs) {
      double worst = 0;
      for (std::size_t j = 0; j < spec.d; ++j) worst = std::max(worst, std::abs(x->x[j] - centre[j]));
      outliers += worst > 10.0;
    }
    EXPECT_NEAR(static_cast<double>(outliers) / static_cast<double>(xs.size()), 0.05, 0.01);
  }
}

TEST(Streams, RingShells) {
  const auto s = generate(small(StreamKind::Ring, 2000));
  for (ClassId c = 0; c < 6; ++c) {
    std::vector<double> norms;
    for (const auto* x : class_samples(s, c)) {
      double n2 = 0;
      for (double v : x->x) n2 += v * v;
      norms.push_back(std::sqrt(n2));
    }
    const auto m = moments(norms);
    EXPECT_NEAR(m.mean, c + 1.0, 0.05);
    EXPECT_NEAR(std::sqrt(m.var), 0.3, 0.05);
  }
}

TEST(Streams, AntipodalClassMeansNearZero) {
  const auto s = generate(small(StreamKind::Antipodal, 4000));
  for (ClassId c = 0; c < 8; ++c) {
    const auto xs = class_samples(s, c);
    for (std::size_t j = 0; j < 10; ++j) EXPECT_NEAR(moments(feature(xs, j)).mean, 0.0, 0.1);
  }
}

TEST(Streams, NoisyFeatureUninformativeDims) {
  const auto s = generate(small(StreamKind::NoisyFeature, 4000));
  for (ClassId c : {0, 5})
    for (std::size_t j = 2; j < 20; j += 5) {
      const auto m = moments(feature(class_samples(s, c), j));
      EXPECT_NEAR(m.mean, 0.0, 0.1);
      EXPECT_NEAR(m.var, 1.0, 0.1);
    }
}

TEST(Streams, RandomMeansInUnitBox) {
  StreamSpec spec = default_spec(StreamKind::RandomMeans);
  spec.samples_per_class = 500;
  const auto s = generate(spec);
  for (ClassId c = 0; c < 50; c += 7) {
    const auto xs = class_samples(s, c);
    for (std::size_t j = 0; j < 10; ++j) {
      const auto m = moments(feature(xs, j));
      EXPECT_GT(m.mean, -0.1);
      EXPECT_LT(m.mean, 5.1);
      EXPECT_NEAR(std::sqrt(m.var), 0.3, 0.05);
    }
  }
}

TEST(Csv, OneHotAndRandomHoldout) {
  TempDir dir;
  std::string body = "x,colour,label\n";
  const char* colours[] = {"red", "green", "blue"};
  for (int i = 0; i < 200; ++i)
    body += std::to_string(i * 0.5) + "," + colours[i % 3] + "," + (i % 2 ? "b" : "a") + "\n";
  CsvSchema schema;
  schema.categorical_columns = {"colour"};
  schema.classes_per_task = 1;
  const auto s = load_csv(dir.file("one_hot.csv", body), schema);
  EXPECT_EQ(s.dim, 4u);
  EXPECT_EQ(s.feature_names, (std::vector<std::string>{"x", "colour=blue", "colour=green", "colour=red"}));
  ASSERT_EQ(s.feature_kinds.size(), 4u);
  EXPECT_EQ(s.feature_kinds[0], FeatureKind::Continuous);
  EXPECT_EQ(s.feature_kinds[3], FeatureKind::Categorical);
  EXPECT_EQ(s.class_names, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(s.tasks.size(), 2u);
  for (const auto& t : s.tasks) {
    EXPECT_EQ(t.train.size(), 80u);
    EXPECT_EQ(t.test.size(), 20u);
    for (const auto& smp : t.train) EXPECT_DOUBLE_EQ(smp.x[1] + smp.x[2] + smp.x[3], 1.0);
  }
  // First data row: x = 0, colour red, label a.
  bool found = false;
  for (const auto* part : {&s.tasks[0].train, &s.tasks[0].test})
    for (const auto& smp : *part)
      if (smp.x[0] == 0.0) {
        EXPECT_EQ(smp.x, (std::vector<double>{0.0, 0.0, 0.0, 1.0}));
        found = true;
      }
  EXPECT_TRUE(found);
}

TEST(Csv, TaskColumnIsVerbatim) {
  TempDir dir;
  const std::string body =
      "f0;f1;label;task\n"
      "1;2;cat;7\n"
      "3;4;dog;2\n"
      "5;6;cow;7\n"
      "7;8;dog;2\n";
  CsvSchema schema;
  schema.delimiter = ';';
  schema.task_column = "task";
  schema.test_fraction = 0.0;
  const auto s = load_csv(dir.file("tasks.csv", body), schema);
  ASSERT_EQ(s.tasks.size(), 2u);
  auto name = [&](ClassId c) { return s.class_names[static_cast<std::size_t>(c)]; };
  ASSERT_EQ(s.tasks[0].classes.size(), 1u);
  EXPECT_EQ(name(s.tasks[0].classes[0]), "dog");
  EXPECT_EQ(s.tasks[1].classes.size(), 2u);
  EXPECT_EQ(s.tasks[0].train.size(), 2u);
  EXPECT_EQ(s.tasks[0].train[0].x, (std::vector<double>{3.0, 4.0}));
}

TEST(Csv, Errors) {
  TempDir dir;
  CsvSchema schema;
  try {
    load_csv(dir.file("short.csv", "a,label\n1,x\n2\n3,y\n"), schema);
    FAIL() << "expected a data error";
  } catch (const DataError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  try {
    load_csv(dir.file("text.csv", "a,label\n1,x\n\n2,y\nzz,y\n"), schema);
    FAIL() << "expected a data error";
  } catch (const DataError& e) {
    EXPECT_EQ(e.line(), 5u);
    EXPECT_NE(std::string(e.what()).find("line 5"), std::string::npos);
  }
  EXPECT_THROW(load_csv(dir.file("nolabel.csv", "a,b\n1,2\n"), schema), DataError);
  EXPECT_THROW(load_csv(dir.file("missing.csv"), schema), DataError);
  CsvSchema bad = schema;
  bad.test_fraction = 1.0;
  EXPECT_THROW(load_csv(dir.file("ok.csv", "a,label\n1,x\n"), bad), ConfigError);
  CsvSchema clash = schema;
  clash.task_column = "t";
  clash.test_fraction = 0.0;
  EXPECT_THROW(load_csv(dir.file("clash.csv", "a,label,t\n1,x,0\n2,x,1\n"), clash), DataError);
}

TEST(Csv, WriteThenLoadRestoresSchedule) {
  TempDir dir;
  StreamSpec spec = small(StreamKind::Skewed, 40);
  const auto original = generate(spec);
  const auto path = dir.file("round.csv");
  write_csv(original, path);
  CsvSchema schema;
  schema.task_column = "task";
  schema.split_column = "split";
  const auto loaded = load_csv(path, schema);
  ASSERT_EQ(loaded.tasks.size(), original.tasks.size());
  EXPECT_EQ(loaded.dim, original.dim);
  EXPECT_EQ(loaded.feature_names, original.feature_names);
  for (std::size_t t = 0; t < original.tasks.size(); ++t) {
    EXPECT_EQ(loaded.tasks[t].classes, original.tasks[t].classes);
    ASSERT_EQ(loaded.tasks[t].train.size(), original.tasks[t].train.size());
    ASSERT_EQ(loaded.tasks[t].test.size(), original.tasks[t].test.size());
    for (std::size_t i = 0; i < original.tasks[t].train.size(); ++i) {
      EXPECT_EQ(loaded.tasks[t].train[i].x, original.tasks[t].train[i].x);
      EXPECT_EQ(loaded.tasks[t].train[i].y, original.tasks[t].train[i].y);
    }
  }
}
