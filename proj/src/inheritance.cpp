#include "mist/inheritance.hpp"

#include <algorithm>
#include <cmath>

#include "mist/error.hpp"
#include "mist/normal.hpp"

namespace mist {

void InheritanceConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (!(clip_lo >= 0.0 && clip_lo <= clip_hi && clip_hi <= 1.0))
    throw ConfigError("rank clip bounds must satisfy 0 <= lo <= hi <= 1");
  if (!(min_mass >= 0.0)) throw ConfigError("minimum inherited mass must be non-negative");
  if (!(variance_floor > 0.0)) throw ConfigError("variance floor must be positive");
}

Moments truncated_moments(double mu, double sigma, double v, Side side, double variance_floor) {
  if (!(sigma > 0.0)) throw InvalidInput("truncated moments require sigma > 0");
  const double zeta = (v - mu) / sigma;
  const double var = sigma * sigma;
  if (zeta > kDegenerateZeta) {
    // Nearly all mass lies left of v.
    return side == Side::Left ? Moments{mu, var} : Moments{v, variance_floor};
  }
  if (zeta < -kDegenerateZeta) {
    return side == Side::Right ? Moments{mu, var} : Moments{v, variance_floor};
  }
  const double phi = normal::pdf(zeta);
  if (side == Side::Left) {
    const double lambda = phi / normal::cdf(zeta);
    const double factor = 1.0 - zeta * lambda - lambda * lambda;
    return {mu - sigma * lambda, var * std::clamp(factor, 0.0, 1.0)};
  }
  const double lambda = phi / normal::sf(zeta);
  const double factor = 1.0 + zeta * lambda - lambda * lambda;
  return {mu + sigma * lambda, var * std::clamp(factor, 0.0, 1.0)};
}

double left_fraction(double mu, double sigma, double v) {
  if (!(sigma > 0.0)) return mu <= v ? 1.0 : 0.0;
  return normal::cdf((v - mu) / sigma);
}

namespace {

ClassFeatureStat rescaled(const ClassFeatureStat& f, double scale) {
  ClassFeatureStat out = f;
  out.count = f.count * scale;
  out.m2 = f.m2 * scale;
  return out;
}

ClassFeatureStat with_moments(double count, double mean, double variance) {
  return ClassFeatureStat{count, mean, std::max(variance, 0.0) * count};
}

}  // namespace

std::pair<LeafStats, LeafStats> project_split(const LeafStats& parent, std::size_t feature, double v,
                                              const InheritanceConfig& cfg, FeatureKind kind,
                                              std::uint64_t left_seed, std::uint64_t right_seed) {
  if (feature >= parent.dim()) throw InvalidInput("split feature out of range");
  if (!std::isfinite(v)) throw InvalidInput("split threshold must be finite");
  LeafStats left(parent.dim(), parent.sketch_capacity(), left_seed);
  LeafStats right(parent.dim(), parent.sketch_capacity(), right_seed);
  if (cfg.mode == InheritanceMode::None || cfg.alpha <= 0.0) return {std::move(left), std::move(right)};

  std::map<ClassId, std::pair<double, double>> quantile_means;
  if (cfg.mode == InheritanceMode::SketchQuantile && kind == FeatureKind::Continuous)
    quantile_means = sketch_inherit_means(parent, feature, v, cfg);

  for (const auto& [c, cls] : parent.classes()) {
    if (!cls.has_mass() || cls.features.empty()) continue;
    const ClassFeatureStat& f = cls.features[feature];
    const double sigma = std::sqrt(f.variance());

    double frac_left;
    ClassFeatureStat split_left, split_right;
    if (kind == FeatureKind::Categorical) {
      const double ones = std::clamp(f.count * f.mean, 0.0, f.count);
      frac_left = f.count > 0.0 ? (f.count - ones) / f.count : 1.0;
    } else {
      frac_left = left_fraction(f.mean, sigma, v);
    }
    const double frac_right = kind == FeatureKind::Continuous && sigma > 0.0
                                  ? normal::sf((v - f.mean) / sigma)
                                  : 1.0 - frac_left;

    const double scale_left = cfg.alpha * frac_left;
    const double scale_right = cfg.alpha * frac_right;
    const double count_left = f.count * scale_left;
    const double count_right = f.count * scale_right;

    if (kind == FeatureKind::Categorical || !(sigma > 0.0)) {
      // A point mass, or a one-hot indicator: each side sees a single value.
      const double lv = kind == FeatureKind::Categorical ? 0.0 : f.mean;
      const double rv = kind == FeatureKind::Categorical ? 1.0 : f.mean;
      split_left = with_moments(count_left, lv, 0.0);
      split_right = with_moments(count_right, rv, 0.0);
    } else {
      Moments ml = truncated_moments(f.mean, sigma, v, Side::Left, cfg.variance_floor);
      Moments mr = truncated_moments(f.mean, sigma, v, Side::Right, cfg.variance_floor);
      if (auto it = quantile_means.find(c); it != quantile_means.end()) {
        ml.mean = it->second.first;
        mr.mean = it->second.second;
      }
      split_left = with_moments(count_left, ml.mean, ml.variance);
      split_right = with_moments(count_right, mr.mean, mr.variance);
    }

    auto emit = [&](LeafStats& child, double scale, const ClassFeatureStat& split_stat) {
      const double mass = cls.pseudo * scale;
      if (!(mass > 0.0) || mass < cfg.min_mass) return;
      ClassStats out;
      out.pseudo = mass;
      out.features.reserve(cls.features.size());
      for (std::size_t j = 0; j < cls.features.size(); ++j)
        out.features.push_back(j == feature ? split_stat : rescaled(cls.features[j], scale));
      child.mutable_classes().emplace(c, std::move(out));
    };
    emit(left, scale_left, split_left);
    emit(right, scale_right, split_right);
  }
  return {std::move(left), std::move(right)};
}

std::map<ClassId, std::pair<double, double>> sketch_inherit_means(const LeafStats& parent, std::size_t feature,
                                                                  double v, const InheritanceConfig& cfg) {
  if (feature >= parent.dim()) throw InvalidInput("split feature out of range");
  std::map<ClassId, std::pair<double, double>> out;
  auto clip = [&](double r) { return std::clamp(r, cfg.clip_lo, cfg.clip_hi); };
  for (const auto& [c, cls] : parent.classes()) {
    if (cls.sketches.empty() || cls.sketches[feature].empty()) continue;
    const auto& sketch = cls.sketches[feature];
    const double r = sketch.rank(v);
    out[c] = {sketch.quantile(clip(r / 2.0)), sketch.quantile(clip(r + (1.0 - r) / 2.0))};
  }
  return out;
}

}  // namespace mist
