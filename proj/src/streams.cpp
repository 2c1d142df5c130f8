#include "mist/streams.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <set>

#include "mist/error.hpp"

namespace mist {

namespace {

struct KindInfo {
  StreamKind kind;
  const char* name;
};

constexpr KindInfo kKinds[] = {
    {StreamKind::GaussianMixture, "synth-gauss"},
    {StreamKind::Multimodal, "multimodal"},
    {StreamKind::Skewed, "skewed"},
    {StreamKind::AngularSectors, "angular-sectors"},
    {StreamKind::Antipodal, "antipodal"},
    {StreamKind::Ring, "ring"},
    {StreamKind::HeavyTail, "heavy-tail"},
    {StreamKind::NoisyFeature, "noisy-feature"},
    {StreamKind::ConceptDrift, "concept-drift"},
    {StreamKind::Pareto, "pareto"},
    {StreamKind::LogNormal, "lognormal"},
    {StreamKind::Exponential, "exponential"},
    {StreamKind::OutlierContaminated, "outlier"},
    {StreamKind::RandomMeans, "random-means"},
    {StreamKind::Csv, "csv"},
};

using Rng = std::mt19937_64;
using Sampler = std::function<std::vector<double>(Rng&)>;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
double gauss(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

std::vector<double> uniform_vector(Rng& rng, std::size_t d, double lo, double hi) {
  std::vector<double> v(d);
  for (auto& x : v) x = uniform(rng, lo, hi);
  return v;
}

std::vector<double> unit_vector(Rng& rng, std::size_t d) {
  std::vector<double> v(d);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& x : v) {
      x = gauss(rng);
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

// Up to d mutually orthogonal unit vectors (Gram-Schmidt on Gaussian draws);
// beyond d, plain random unit vectors.
std::vector<std::vector<double>> spread_directions(Rng& rng, std::size_t count, std::size_t d) {
  std::vector<std::vector<double>> out;
  while (out.size() < count) {
    auto v = unit_vector(rng, d);
    if (out.size() < d) {
      for (const auto& u : out) {
        double dot = 0.0;
        for (std::size_t j = 0; j < d; ++j) dot += u[j] * v[j];
        for (std::size_t j = 0; j < d; ++j) v[j] -= dot * u[j];
      }
      double norm = 0.0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
      if (norm < 1e-6) continue;
      for (auto& x : v) x /= norm;
    }
    out.push_back(std::move(v));
  }
  return out;
}

// Class locations drawn uniformly in [lo, hi], with the spread of feature j shrunk
// by decay^j around the interval midpoint. decay = 1 keeps all features alike.
std::vector<double> decayed_locations(Rng& rng, std::size_t d, double lo, double hi, double decay) {
  auto v = uniform_vector(rng, d, lo, hi);
  const double mid = 0.5 * (lo + hi);
  double scale = 1.0;
  for (auto& x : v) {
    x = mid + scale * (x - mid);
    scale *= decay;
  }
  return v;
}

Sampler gaussian_sampler(std::vector<double> mean, double sigma) {
  return [mean = std::move(mean), sigma](Rng& rng) {
    std::vector<double> x(mean.size());
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = mean[j] + sigma * gauss(rng);
    return x;
  };
}

std::vector<Sampler> build_samplers(const StreamSpec& spec, Rng& rng) {
  const std::size_t K = spec.k_classes;
  const std::size_t d = spec.d;
  const std::size_t per_task = K / spec.tasks;
  auto p = [&](const char* key) { return spec.param(key); };
  std::vector<Sampler> out;
  out.reserve(K);

  switch (spec.kind) {
    case StreamKind::GaussianMixture:
    case StreamKind::RandomMeans: {
      const bool random_means = spec.kind == StreamKind::RandomMeans;
      const double lo = random_means ? 0.0 : -p("spread");
      const double hi = random_means ? p("mean_hi") : p("spread");
      for (std::size_t c = 0; c < K; ++c) out.push_back(gaussian_sampler(uniform_vector(rng, d, lo, hi), p("sigma")));
      break;
    }
    case StreamKind::Multimodal: {
      const auto modes = static_cast<std::size_t>(p("modes"));
      for (std::size_t c = 0; c < K; ++c) {
        std::vector<std::vector<double>> centres;
        for (std::size_t m = 0; m < modes; ++m) centres.push_back(decayed_locations(rng, d, -p("spread"), p("spread"), p("feature_decay")));
        out.push_back([centres, sigma = p("mode_sigma")](Rng& r) {
          const auto& mu = centres[std::uniform_int_distribution<std::size_t>(0, centres.size() - 1)(r)];
          std::vector<double> x(mu.size());
          for (std::size_t j = 0; j < x.size(); ++j) x[j] = mu[j] + sigma * gauss(r);
          return x;
        });
      }
      break;
    }
    case StreamKind::Skewed: {
      for (std::size_t c = 0; c < K; ++c) {
        auto major = decayed_locations(rng, d, -p("spread"), p("spread"), p("feature_decay"));
        auto dir = unit_vector(rng, d);
        auto minor = major;
        for (std::size_t j = 0; j < d; ++j) minor[j] += p("minority_offset") * dir[j];
        out.push_back([major, minor, frac = p("minority_fraction"), sigma = p("sigma")](Rng& r) {
          const auto& mu = uniform(r, 0.0, 1.0) < frac ? minor : major;
          std::vector<double> x(mu.size());
          for (std::size_t j = 0; j < x.size(); ++j) x[j] = mu[j] + sigma * gauss(r);
          return x;
        });
      }
      break;
    }
    case StreamKind::AngularSectors: {
      if (d < 2) throw ConfigError("angular sectors need at least two dimensions");
      const auto per_class = static_cast<std::size_t>(p("sectors_per_class"));
      const double width = 2.0 * std::numbers::pi / static_cast<double>(K * per_class);
      for (std::size_t c = 0; c < K; ++c) {
        out.push_back([=](Rng& r) {
          const std::size_t m = std::uniform_int_distribution<std::size_t>(0, per_class - 1)(r);
          const double sector = static_cast<double>(c + K * m);
          const double angle = (sector + uniform(r, 0.0, 1.0)) * width;
          const double rad = p("radius") + p("radial_noise") * gauss(r);
          std::vector<double> x(d);
          x[0] = rad * std::cos(angle);
          x[1] = rad * std::sin(angle);
          for (std::size_t j = 2; j < d; ++j) x[j] = p("noise_sigma") * gauss(r);
          return x;
        });
      }
      break;
    }
    case StreamKind::Antipodal: {
      const auto dirs = spread_directions(rng, K, d);
      const double offset = p("centre_distance") * p("sigma");
      for (std::size_t c = 0; c < K; ++c) {
        // Alternating signs keep the two clusters exactly balanced.
        auto flip = std::make_shared<bool>(false);
        out.push_back([dir = dirs[c], offset, sigma = p("sigma"), flip](Rng& r) {
          const double sign = *flip ? -1.0 : 1.0;
          *flip = !*flip;
          std::vector<double> x(dir.size());
          for (std::size_t j = 0; j < x.size(); ++j) x[j] = sign * offset * dir[j] + sigma * gauss(r);
          return x;
        });
      }
      break;
    }
    case StreamKind::Ring: {
      for (std::size_t c = 0; c < K; ++c) {
        const double shell = p("shell_spacing") * static_cast<double>(c + 1);
        out.push_back([shell, d, noise = p("radial_noise")](Rng& r) {
          auto u = unit_vector(r, d);
          const double rad = shell + noise * gauss(r);
          for (auto& x : u) x = rad * std::abs(x);
          return u;
        });
      }
      break;
    }
    case StreamKind::HeavyTail: {
      for (std::size_t c = 0; c < K; ++c) {
        out.push_back([mu = decayed_locations(rng, d, -p("spread"), p("spread"), p("feature_decay")), nu = p("nu"), scale = p("scale")](Rng& r) {
          std::student_t_distribution<double> t(nu);
          std::vector<double> x(mu.size());
          for (std::size_t j = 0; j < x.size(); ++j) x[j] = mu[j] + scale * t(r);
          return x;
        });
      }
      break;
    }
    case StreamKind::NoisyFeature: {
      const auto informative = static_cast<std::size_t>(p("informative"));
      if (informative > d) throw ConfigError("more informative dimensions than features");
      for (std::size_t c = 0; c < K; ++c) {
        out.push_back([mu = decayed_locations(rng, informative, -p("spread"), p("spread"), p("feature_decay")), d, sigma = p("sigma"),
                       noise = p("noise_sigma")](Rng& r) {
          std::vector<double> x(d);
          for (std::size_t j = 0; j < d; ++j) x[j] = j < mu.size() ? mu[j] + sigma * gauss(r) : noise * gauss(r);
          return x;
        });
      }
      break;
    }
    case StreamKind::ConceptDrift: {
      for (std::size_t c = 0; c < K; ++c) {
        auto mu = decayed_locations(rng, d, -p("spread"), p("spread"), p("feature_decay"));
        mu[0] += p("drift") * static_cast<double>(c / per_task);
        out.push_back(gaussian_sampler(std::move(mu), p("sigma")));
      }
      break;
    }
    case StreamKind::Pareto: {
      for (std::size_t c = 0; c < K; ++c) {
        out.push_back([loc = decayed_locations(rng, d, 0.0, p("loc_spread"), p("feature_decay")), shape = p("shape")](Rng& r) {
          std::vector<double> x(loc.size());
          for (std::size_t j = 0; j < x.size(); ++j) {
            const double u = 1.0 - uniform(r, 0.0, 1.0);  // (0, 1]
            x[j] = loc[j] + std::log1p(std::pow(u, -1.0 / shape));
          }
          return x;
        });
      }
      break;
    }
    case StreamKind::LogNormal: {
      for (std::size_t c = 0; c < K; ++c) {
        out.push_back([loc = decayed_locations(rng, d, 0.0, p("loc_spread"), p("feature_decay")),
                       s = uniform_vector(rng, d, p("sigma_lo"), p("sigma_hi"))](Rng& r) {
          std::vector<double> x(loc.size());
          for (std::size_t j = 0; j < x.size(); ++j) x[j] = loc[j] + std::exp(s[j] * gauss(r));
          return x;
        });
      }
      break;
    }
    case StreamKind::Exponential: {
      for (std::size_t c = 0; c < K; ++c) {
        out.push_back([loc = decayed_locations(rng, d, 0.0, p("loc_spread"), p("feature_decay")),
                       rate = uniform_vector(rng, d, p("rate_lo"), p("rate_hi"))](Rng& r) {
          std::vector<double> x(loc.size());
          for (std::size_t j = 0; j < x.size(); ++j) x[j] = loc[j] + std::exponential_distribution<double>(rate[j])(r);
          return x;
        });
      }
      break;
    }
    case StreamKind::OutlierContaminated: {
      for (std::size_t c = 0; c < K; ++c) {
        out.push_back([mu = decayed_locations(rng, d, -p("loc_spread"), p("loc_spread"), p("feature_decay")), sigma = p("sigma"),
                       frac = p("contamination"), scale = p("outlier_scale")](Rng& r) {
          const double s = uniform(r, 0.0, 1.0) < frac ? scale * sigma : sigma;
          std::vector<double> x(mu.size());
          for (std::size_t j = 0; j < x.size(); ++j) x[j] = mu[j] + s * gauss(r);
          return x;
        });
      }
      break;
    }
    case StreamKind::Csv:
      throw ConfigError("csv streams are loaded with load_csv, not generated");
  }
  return out;
}

}  // namespace

std::string to_string(StreamKind kind) {
  for (const auto& k : kKinds)
    if (k.kind == kind) return k.name;
  return "unknown";
}

StreamKind parse_stream_kind(const std::string& name) {
  for (const auto& k : kKinds)
    if (name == k.name) return k.kind;
  throw ConfigError("unknown stream kind '" + name + "'");
}

std::vector<StreamKind> synthetic_kinds() {
  std::vector<StreamKind> out;
  for (const auto& k : kKinds)
    if (k.kind != StreamKind::Csv) out.push_back(k.kind);
  return out;
}

std::map<std::string, double> default_params(StreamKind kind) {
  // Only the heavy-tailed audit streams concentrate the class signal on the leading features.
  constexpr double kAuditDecay = 0.05;
  switch (kind) {
    case StreamKind::GaussianMixture: return {{"spread", 4.0}, {"sigma", 1.0}};
    case StreamKind::Multimodal: return {{"feature_decay", 1.0}, {"modes", 3.0}, {"spread", 6.0}, {"mode_sigma", 0.7}};
    case StreamKind::Skewed:
      return {{"feature_decay", 1.0}, {"spread", 4.0}, {"sigma", 1.0}, {"minority_fraction", 0.1}, {"minority_offset", 6.0}};
    case StreamKind::AngularSectors:
      return {{"radius", 3.0}, {"radial_noise", 0.3}, {"sectors_per_class", 3.0}, {"noise_sigma", 1.0}};
    case StreamKind::Antipodal: return {{"centre_distance", 6.0}, {"sigma", 1.0}};
    case StreamKind::Ring: return {{"shell_spacing", 1.0}, {"radial_noise", 0.3}};
    case StreamKind::HeavyTail: return {{"feature_decay", 1.0}, {"spread", 5.0}, {"nu", 2.0}, {"scale", 1.0}};
    case StreamKind::NoisyFeature:
      return {{"feature_decay", 1.0}, {"informative", 2.0}, {"spread", 5.0}, {"sigma", 1.0}, {"noise_sigma", 1.0}};
    case StreamKind::ConceptDrift: return {{"feature_decay", 1.0}, {"spread", 5.0}, {"sigma", 1.0}, {"drift", 1.5}};
    case StreamKind::Pareto: return {{"feature_decay", kAuditDecay}, {"shape", 1.5}, {"loc_spread", 10.0}};
    case StreamKind::LogNormal: return {{"feature_decay", kAuditDecay}, {"loc_spread", 10.0}, {"sigma_lo", 0.8}, {"sigma_hi", 1.5}};
    case StreamKind::Exponential: return {{"feature_decay", kAuditDecay}, {"loc_spread", 10.0}, {"rate_lo", 0.5}, {"rate_hi", 2.0}};
    case StreamKind::OutlierContaminated:
      return {{"feature_decay", kAuditDecay}, {"loc_spread", 10.0}, {"sigma", 1.0}, {"contamination", 0.05}, {"outlier_scale", 50.0}};
    case StreamKind::RandomMeans: return {{"mean_hi", 5.0}, {"sigma", 0.3}};
    case StreamKind::Csv: return {};
  }
  return {};
}

StreamSpec default_spec(StreamKind kind) {
  StreamSpec s;
  s.kind = kind;
  s.params = default_params(kind);
  switch (kind) {
    case StreamKind::GaussianMixture: s.k_classes = 10; s.d = 10; s.tasks = 5; break;
    case StreamKind::Multimodal:
    case StreamKind::Skewed:
    case StreamKind::Antipodal:
    case StreamKind::HeavyTail:
    case StreamKind::ConceptDrift: s.k_classes = 8; s.d = 10; s.tasks = 4; break;
    case StreamKind::AngularSectors: s.k_classes = 4; s.d = 8; s.tasks = 2; break;
    case StreamKind::Ring: s.k_classes = 6; s.d = 8; s.tasks = 3; break;
    case StreamKind::NoisyFeature: s.k_classes = 8; s.d = 20; s.tasks = 4; break;
    case StreamKind::Pareto:
    case StreamKind::LogNormal:
    case StreamKind::Exponential:
    case StreamKind::OutlierContaminated:
      s.k_classes = 6; s.d = 10; s.tasks = 3; s.samples_per_class = 2000; break;
    case StreamKind::RandomMeans:
      s.k_classes = 50; s.d = 10; s.tasks = 10; s.samples_per_class = 20000; s.test_per_class = 100; break;
    case StreamKind::Csv: break;
  }
  return s;
}

double StreamSpec::param(const std::string& key) const {
  if (auto it = params.find(key); it != params.end()) return it->second;
  const auto defaults = default_params(kind);
  if (auto it = defaults.find(key); it != defaults.end()) return it->second;
  throw ConfigError("stream kind " + to_string(kind) + " has no parameter '" + key + "'");
}

void StreamSpec::validate() const {
  if (kind == StreamKind::Csv) throw ConfigError("csv streams have no generator spec");
  if (k_classes == 0 || d == 0 || tasks == 0) throw ConfigError("classes, dimension and tasks must be positive");
  if (k_classes % tasks != 0) throw ConfigError("tasks must divide the class count evenly");
  if (samples_per_class == 0) throw ConfigError("samples per class must be positive");
  const auto defaults = default_params(kind);
  for (const auto& [key, value] : params) {
    if (!defaults.count(key)) throw ConfigError("stream kind " + to_string(kind) + " has no parameter '" + key + "'");
    if (!std::isfinite(value)) throw ConfigError("stream parameter '" + key + "' must be finite");
  }
  if (defaults.count("feature_decay") && !(param("feature_decay") > 0 && param("feature_decay") <= 1))
    throw ConfigError("feature_decay must lie in (0, 1]");
  if (kind == StreamKind::Multimodal && param("modes") < 1) throw ConfigError("modes must be at least 1");
  if (kind == StreamKind::AngularSectors && param("sectors_per_class") < 1)
    throw ConfigError("sectors per class must be at least 1");
  if (kind == StreamKind::HeavyTail && !(param("nu") > 0)) throw ConfigError("nu must be positive");
  if (kind == StreamKind::Pareto && !(param("shape") > 0)) throw ConfigError("shape must be positive");
  if (kind == StreamKind::Exponential && !(param("rate_lo") > 0 && param("rate_hi") >= param("rate_lo")))
    throw ConfigError("exponential rates must be positive and ordered");
}

std::size_t TaskSchedule::class_count() const {
  std::size_t n = 0;
  for (const auto& t : tasks) n += t.classes.size();
  return n;
}

std::size_t TaskSchedule::train_size() const {
  std::size_t n = 0;
  for (const auto& t : tasks) n += t.train.size();
  return n;
}

TaskSchedule generate(const StreamSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  auto samplers = build_samplers(spec, rng);

  TaskSchedule out;
  out.dim = spec.d;
  for (std::size_t j = 0; j < spec.d; ++j) out.feature_names.push_back("f" + std::to_string(j));
  for (std::size_t c = 0; c < spec.k_classes; ++c) out.class_names.push_back(std::to_string(c));
  const std::size_t per_task = spec.k_classes / spec.tasks;
  out.tasks.resize(spec.tasks);
  for (std::size_t c = 0; c < spec.k_classes; ++c) {
    const int t = static_cast<int>(c / per_task);
    Task& task = out.tasks[static_cast<std::size_t>(t)];
    task.classes.push_back(static_cast<ClassId>(c));
    for (std::size_t i = 0; i < spec.samples_per_class; ++i)
      task.train.push_back(Sample{samplers[c](rng), static_cast<ClassId>(c), t});
    for (std::size_t i = 0; i < spec.test_per_class; ++i)
      task.test.push_back(Sample{samplers[c](rng), static_cast<ClassId>(c), t});
  }
  for (auto& task : out.tasks) std::shuffle(task.train.begin(), task.train.end(), rng);
  return out;
}

void validate_schedule(const TaskSchedule& schedule) {
  if (schedule.tasks.empty()) throw DataError("schedule has no tasks");
  if (!schedule.feature_kinds.empty() && schedule.feature_kinds.size() != schedule.dim)
    throw DataError("feature kinds do not match the dimension");
  std::set<ClassId> seen;
  for (const auto& task : schedule.tasks) {
    std::set<ClassId> own(task.classes.begin(), task.classes.end());
    for (ClassId c : own)
      if (!seen.insert(c).second) throw DataError("class " + std::to_string(c) + " appears in two tasks");
    for (const auto* part : {&task.train, &task.test})
      for (const auto& s : *part) {
        if (s.x.size() != schedule.dim) throw DataError("sample dimension does not match the schedule");
        if (!own.count(s.y)) throw DataError("sample label is not part of its task");
      }
  }
}

}  // namespace mist
