#include "mist/split_engine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "mist/error.hpp"

namespace mist {

void SplitCriterion::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (!(tie_threshold >= 0.0)) throw ConfigError("tie threshold must be non-negative");
  if (grace_period == 0) throw ConfigError("grace period must be positive");
  if (check_interval == 0) throw ConfigError("check interval must be positive");
  if (thresholds == ThresholdPolicy::Dense && dense_grid == 0)
    throw ConfigError("dense threshold grid must be positive");
}

bool is_gap_kind(CriterionKind kind) {
  return kind == CriterionKind::McDiarmidGapTest || kind == CriterionKind::Hoeffding ||
         kind == CriterionKind::Rutkowski;
}

double gini(std::span<const double> counts) {
  double total = 0.0;
  for (double c : counts) {
    if (c < 0.0) throw InvalidInput("class counts must be non-negative");
    total += c;
  }
  if (!(total > 0.0)) throw InvalidInput("gini of an empty count vector");
  double sq = 0.0;
  for (double c : counts) sq += c * c;
  return 1.0 - sq / (total * total);
}

double split_gain(std::span<const double> parent, std::span<const double> left,
                  std::span<const double> right) {
  if (parent.size() != left.size() || parent.size() != right.size())
    throw InvalidInput("count vectors differ in length");
  double nl = 0.0, nr = 0.0;
  for (std::size_t c = 0; c < parent.size(); ++c) {
    const double scale = std::max(1.0, std::abs(parent[c]));
    if (std::abs(parent[c] - left[c] - right[c]) > 1e-9 * scale)
      throw InvalidInput("children do not partition the parent");
    nl += left[c];
    nr += right[c];
  }
  if (!(nl > 0.0) || !(nr > 0.0)) throw InvalidSplit("split leaves a child empty");
  const double n = nl + nr;
  return gini(parent) - (nl / n) * gini(left) - (nr / n) * gini(right);
}

std::vector<double> candidate_thresholds(const LeafStats& stats, std::size_t feature, FeatureKind kind) {
  if (feature >= stats.dim()) throw InvalidInput("feature index out of range");
  std::vector<double> medians;
  for (const auto& [c, cls] : stats.classes()) {
    if (cls.sketches.empty() || cls.sketches[feature].empty()) continue;
    medians.push_back(cls.sketches[feature].quantile(0.5));
  }
  if (medians.size() < 2) return {};
  if (kind == FeatureKind::Categorical) return {0.5};
  std::sort(medians.begin(), medians.end());
  medians.erase(std::unique(medians.begin(), medians.end()), medians.end());
  std::vector<double> out;
  out.reserve(medians.size());
  for (std::size_t i = 1; i < medians.size(); ++i) out.push_back(0.5 * (medians[i - 1] + medians[i]));
  return out;
}

std::vector<double> dense_thresholds(const LeafStats& stats, std::size_t feature, std::size_t grid) {
  if (feature >= stats.dim()) throw InvalidInput("feature index out of range");
  std::size_t active = 0;
  double total = 0.0;
  for (const auto& [c, cls] : stats.classes()) {
    if (cls.sketches.empty() || cls.sketches[feature].empty()) continue;
    ++active;
    total += static_cast<double>(cls.sketches[feature].count());
  }
  if (active < 2) return {};
  // Pooled quantile by bisection on the mixture CDF, resolved to a retained item.
  std::vector<double> items;
  for (const auto& [c, cls] : stats.classes()) {
    if (cls.sketches.empty() || cls.sketches[feature].empty()) continue;
    for (const auto& level : cls.sketches[feature].levels()) items.insert(items.end(), level.begin(), level.end());
  }
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  auto pooled_rank = [&](double v) {
    double r = 0.0;
    for (const auto& [c, cls] : stats.classes()) {
      if (cls.sketches.empty() || cls.sketches[feature].empty()) continue;
      r += static_cast<double>(cls.sketches[feature].count()) * cls.sketches[feature].rank(v);
    }
    return r / total;
  };
  std::vector<double> out;
  for (std::size_t i = 1; i <= grid; ++i) {
    const double target = static_cast<double>(i) / static_cast<double>(grid + 1);
    auto it = std::partition_point(items.begin(), items.end(), [&](double v) { return pooled_rank(v) < target; });
    if (it == items.end()) continue;
    out.push_back(*it);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double radius(const SplitCriterion& criterion, double n, std::size_t d, std::size_t m, std::size_t) {
  if (!(n >= 1.0) || d == 0 || m == 0) throw InvalidInput("radius requires n >= 1, d >= 1, m >= 1");
  const double dm = static_cast<double>(d) * static_cast<double>(m);
  const double delta = criterion.delta;
  switch (criterion.kind) {
    case CriterionKind::McDiarmidGapTest:
      return std::sqrt(32.0 * std::log(2.0 * dm / delta) / n);
    case CriterionKind::GainTest:
      return std::sqrt(8.0 * std::log(2.0 * dm / delta) / n);
    case CriterionKind::GainTestNoUnion:
      return std::sqrt(8.0 * std::log(2.0 / delta) / n);
    case CriterionKind::Hoeffding:
      return std::sqrt(std::log(1.0 / delta) / (2.0 * n));
    case CriterionKind::Rutkowski:
      return 2.0 * std::sqrt(32.0 * std::log(2.0 * dm / delta) / n);
  }
  throw InvalidInput("unknown criterion kind");
}

std::vector<std::optional<SplitCandidate>> best_candidates(const LeafStats& stats,
                                                           const SplitCriterion& criterion,
                                                           std::span<const FeatureKind> kinds,
                                                           std::size_t* thresholds_per_feature) {
  if (!kinds.empty() && kinds.size() != stats.dim())
    throw InvalidInput("feature kinds do not match leaf dimension");

  std::vector<ClassId> ids;
  std::vector<const ClassStats*> active;
  std::vector<double> parent;
  for (const auto& [c, cls] : stats.classes()) {
    if (cls.sketches.empty()) continue;
    ids.push_back(c);
    active.push_back(&cls);
    parent.push_back(static_cast<double>(cls.sketches.front().count()));
  }

  std::vector<std::optional<SplitCandidate>> best(stats.dim());
  if (ids.empty()) {
    if (thresholds_per_feature) *thresholds_per_feature = 1;
    return best;
  }
  const double n_total = std::accumulate(parent.begin(), parent.end(), 0.0);
  const double parent_gini = gini(parent);
  std::size_t m = 0;
  std::vector<double> left(ids.size()), right(ids.size());
  std::vector<std::vector<double>> rank_table(ids.size());
  for (std::size_t j = 0; j < stats.dim(); ++j) {
    const FeatureKind kind = kinds.empty() ? FeatureKind::Continuous : kinds[j];
    std::vector<double> thresholds;
    if (criterion.thresholds == ThresholdPolicy::Dense && kind == FeatureKind::Continuous)
      thresholds = dense_thresholds(stats, j, criterion.dense_grid);
    else
      thresholds = candidate_thresholds(stats, j, kind);
    m = std::max(m, thresholds.size());
    if (thresholds.empty()) continue;
    for (std::size_t c = 0; c < active.size(); ++c) rank_table[c] = active[c]->sketches[j].ranks(thresholds);

    std::optional<std::size_t> best_t;
    double best_gain = 0.0;
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      double nl = 0.0, sl = 0.0, sr = 0.0;
      for (std::size_t c = 0; c < active.size(); ++c) {
        const double l = parent[c] * rank_table[c][t];
        const double r = parent[c] - l;
        nl += l;
        sl += l * l;
        sr += r * r;
      }
      const double nr = n_total - nl;
      if (!(nl > 0.0) || !(nr > 0.0)) continue;
      // Same quantity as split_gain(parent, left, right), in sum-of-squares form.
      const double gain = parent_gini - (nl / n_total) * (1.0 - sl / (nl * nl)) - (nr / n_total) * (1.0 - sr / (nr * nr));
      if (!best_t || gain > best_gain) {
        best_t = t;
        best_gain = gain;
      }
    }
    if (!best_t) continue;
    for (std::size_t c = 0; c < active.size(); ++c) {
      left[c] = parent[c] * rank_table[c][*best_t];
      right[c] = parent[c] - left[c];
    }
    best[j] = SplitCandidate{j, thresholds[*best_t], best_gain, ids, left, right};
  }
  if (thresholds_per_feature) *thresholds_per_feature = std::max<std::size_t>(m, 1);
  return best;
}

std::optional<SplitDecision> gap_test(const LeafStats& stats, const SplitCriterion& criterion,
                                      std::span<const FeatureKind> kinds) {
  if (stats.n_leaf() < criterion.grace_period) return std::nullopt;
  std::size_t m = 1;
  auto per_feature = best_candidates(stats, criterion, kinds, &m);

  const SplitCandidate* first = nullptr;
  double second = 0.0;
  for (const auto& cand : per_feature) {
    if (!cand) continue;
    if (!first || cand->gain > first->gain) {
      if (first) second = std::max(second, first->gain);
      first = &*cand;
    } else {
      second = std::max(second, cand->gain);
    }
  }
  if (!first) return std::nullopt;

  const double eps = radius(criterion, static_cast<double>(stats.n_leaf()), stats.dim(), m);
  const double stat = is_gap_kind(criterion.kind) ? first->gain - second : first->gain;
  const bool by_bound = stat > eps;
  const bool by_tie = criterion.tie_rule && eps < criterion.tie_threshold && first->gain > 0.0;
  if (!by_bound && !by_tie) return std::nullopt;
  return SplitDecision{*first, second, eps, m, !by_bound};
}

std::optional<double> routed_gain(std::span<const RoutedLabel> samples) {
  std::map<int, std::pair<double, double>> counts;
  for (const auto& s : samples) {
    auto& [l, r] = counts[s.label];
    (s.left ? l : r) += 1.0;
  }
  std::vector<double> parent, left, right;
  for (const auto& [label, lr] : counts) {
    left.push_back(lr.first);
    right.push_back(lr.second);
    parent.push_back(lr.first + lr.second);
  }
  try {
    return split_gain(parent, left, right);
  } catch (const InvalidSplit&) {
    return std::nullopt;
  }
}

double brute_force_sensitivity(std::span<const RoutedLabel> samples, ReplacementScope scope, int alphabet) {
  if (samples.size() < 2) throw InvalidInput("sensitivity oracle needs at least two samples");
  if (alphabet <= 0) {
    int top = 0;
    for (const auto& s : samples) top = std::max(top, s.label);
    alphabet = top + 2;
  }
  const auto base = routed_gain(samples);
  if (!base) throw InvalidSplit("original configuration leaves a child empty");

  std::vector<RoutedLabel> work(samples.begin(), samples.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < work.size(); ++i) {
    const RoutedLabel original = work[i];
    for (int label = 0; label < alphabet; ++label) {
      for (int side = 0; side < 2; ++side) {
        const bool left = side == 0;
        if (scope == ReplacementScope::SameSide && left != original.left) continue;
        if (scope == ReplacementScope::CrossSide && left == original.left) continue;
        work[i] = RoutedLabel{label, left};
        if (const auto g = routed_gain(work)) worst = std::max(worst, std::abs(*base - *g));
      }
    }
    work[i] = original;
  }
  return worst;
}

}  // namespace mist
