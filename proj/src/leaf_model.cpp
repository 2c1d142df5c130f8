#include "mist/leaf_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mist/error.hpp"
#include "mist/normal.hpp"

namespace mist {

void ClassFeatureStat::observe(double x) {
  count += 1.0;
  const double delta = x - mean;
  mean += delta / count;
  m2 += delta * (x - mean);
  if (m2 < 0.0) m2 = 0.0;
}

void LeafStats::observe(const Sample& sample) {
  if (sample.x.size() != dim_) throw InvalidInput("sample dimension does not match leaf dimension");
  for (double v : sample.x)
    if (!std::isfinite(v)) throw InvalidInput("sample contains a non-finite feature");

  auto& cls = classes_[sample.y];
  if (cls.features.empty()) cls.features.resize(dim_);
  if (cls.sketches.empty()) {
    cls.sketches.reserve(dim_);
    const std::uint64_t class_seed = mix_seed(seed_, static_cast<std::uint64_t>(sample.y));
    for (std::size_t j = 0; j < dim_; ++j) cls.sketches.emplace_back(sketch_k_, mix_seed(class_seed, j));
  }
  for (std::size_t j = 0; j < dim_; ++j) {
    cls.features[j].observe(sample.x[j]);
    cls.sketches[j].update(sample.x[j]);
  }
  cls.pseudo += 1.0;
  ++cls.local;
  ++n_leaf_;
}

std::size_t LeafStats::k_local() const {
  return static_cast<std::size_t>(
      std::count_if(classes_.begin(), classes_.end(), [](const auto& kv) { return kv.second.has_mass(); }));
}

double LeafStats::total_mass() const {
  double total = 0.0;
  for (const auto& [c, cls] : classes_) total += cls.pseudo;
  return total;
}

std::size_t LeafStats::sketch_count() const {
  std::size_t total = 0;
  for (const auto& [c, cls] : classes_) total += cls.sketches.size();
  return total;
}

std::size_t LeafStats::retained_items() const {
  std::size_t total = 0;
  for (const auto& [c, cls] : classes_)
    for (const auto& s : cls.sketches) total += s.retained();
  return total;
}

ClassScores class_prior(const LeafStats& stats, double eps_s, std::span<const ClassId> fallback) {
  ClassScores prior;
  double z = 0.0;
  for (const auto& [c, cls] : stats.classes()) {
    if (!cls.has_mass()) continue;
    prior[c] = cls.pseudo + eps_s;
    z += cls.pseudo + eps_s;
  }
  if (prior.empty()) {
    for (ClassId c : fallback) prior[c] = 1.0;
    z = static_cast<double>(prior.size());
  }
  for (auto& [c, p] : prior) p /= z;
  return prior;
}

ClassScores predict_gaussian(const LeafStats& stats, std::span<const double> x, double eps_s,
                             double variance_floor) {
  if (x.size() != stats.dim()) throw InvalidInput("query dimension does not match leaf dimension");
  ClassScores scores = class_prior(stats, eps_s);
  if (scores.empty()) throw EmptyLeaf();
  for (auto& [c, score] : scores) {
    const auto& cls = stats.classes().at(c);
    score = std::log(score);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const auto& f = cls.features[j];
      if (f.count <= 0.0) continue;
      score += normal::log_density(x[j], f.mean, f.variance() + variance_floor);
    }
  }
  return scores;
}

double sketch_likelihood(double cdf_diff, double h, double eps_s) {
  return (cdf_diff + eps_s) / (2.0 * h + eps_s);
}

double inter_quantile_spacing(const QuantileSketch& sketch, double x, double eps_s) {
  const double r = sketch.rank(x);
  const double hi = sketch.quantile(std::min(r + kIqsHalfWindow, 1.0));
  const double lo = sketch.quantile(std::max(r - kIqsHalfWindow, 0.0));
  return hi > lo ? hi - lo : eps_s;
}

ClassScores predict_sketch(const LeafStats& stats, std::span<const double> x,
                           const SketchLeafParams& params) {
  if (x.size() != stats.dim()) throw InvalidInput("query dimension does not match leaf dimension");
  if (!params.kinds.empty() && params.kinds.size() != stats.dim())
    throw InvalidInput("feature kinds do not match leaf dimension");
  ClassScores scores = class_prior(stats, params.eps_s);
  if (scores.empty()) throw EmptyLeaf();
  const double eps = params.eps_s;
  for (auto& [c, score] : scores) {
    const auto& cls = stats.classes().at(c);
    score = std::log(score);
    if (cls.sketches.empty()) continue;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const bool categorical = !params.kinds.empty() && params.kinds[j] == FeatureKind::Categorical;
      if (categorical) {
        const auto& f = cls.features[j];
        const double ones = f.count * f.mean;
        const double match = x[j] > 0.5 ? ones : f.count - ones;
        score += std::log((std::max(match, 0.0) + eps) / (f.count + 2.0 * eps));
        continue;
      }
      const auto& sketch = cls.sketches[j];
      const double h = params.beta * inter_quantile_spacing(sketch, x[j], eps);
      const double diff = sketch.rank(x[j] + h) - sketch.rank(x[j] - h);
      score += std::log(sketch_likelihood(diff, h, eps));
    }
  }
  return scores;
}

ClassId argmax(const ClassScores& scores) {
  ClassId best = kUnknownClass;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const auto& [c, s] : scores) {
    if (best == kUnknownClass || s > best_score) {
      best = c;
      best_score = s;
    }
  }
  return best;
}

}  // namespace mist
