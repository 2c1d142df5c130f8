#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mist/leaf_model.hpp"
#include "mist/types.hpp"

namespace mist {

enum class CriterionKind { McDiarmidGapTest, GainTest, GainTestNoUnion, Hoeffding, Rutkowski };

enum class ThresholdPolicy {
  MedianMidpoints,  // midpoints of adjacent class medians
  Dense,            // evenly spaced quantiles of the pooled class sketches
};

struct SplitCriterion {
  CriterionKind kind = CriterionKind::McDiarmidGapTest;
  double delta = 0.10;
  double tie_threshold = 0.05;
  std::uint64_t grace_period = 200;
  bool tie_rule = true;
  // Test every `check_interval` samples once the grace period is reached.
  std::uint64_t check_interval = 1;
  ThresholdPolicy thresholds = ThresholdPolicy::MedianMidpoints;
  std::size_t dense_grid = 16;

  void validate() const;
};

bool is_gap_kind(CriterionKind kind);

struct SplitCandidate {
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
  std::vector<ClassId> classes;
  std::vector<double> left_counts;
  std::vector<double> right_counts;
};

struct SplitDecision {
  SplitCandidate best;
  double second_best_gain = 0.0;  // best gain among the other features
  double radius = 0.0;
  std::size_t thresholds_per_feature = 1;  // m used in the radius
  bool by_tie_rule = false;
};

double gini(std::span<const double> counts);
double split_gain(std::span<const double> parent, std::span<const double> left,
                  std::span<const double> right);

std::vector<double> candidate_thresholds(const LeafStats& stats, std::size_t feature,
                                         FeatureKind kind = FeatureKind::Continuous);
std::vector<double> dense_thresholds(const LeafStats& stats, std::size_t feature, std::size_t grid);

// `k_classes` is accepted so callers can confirm that the radius ignores it.
double radius(const SplitCriterion& criterion, double n, std::size_t d, std::size_t m,
              std::size_t k_classes = 0);

// Best candidate per feature, using routing masses count_c * rank_c(v) from the
// class sketches. Entries are empty for features without a valid candidate.
std::vector<std::optional<SplitCandidate>> best_candidates(const LeafStats& stats,
                                                           const SplitCriterion& criterion,
                                                           std::span<const FeatureKind> kinds,
                                                           std::size_t* thresholds_per_feature = nullptr);

std::optional<SplitDecision> gap_test(const LeafStats& stats, const SplitCriterion& criterion,
                                      std::span<const FeatureKind> kinds = {});

// One sample of a labelled, routed multiset used by the sensitivity oracle.
struct RoutedLabel {
  int label = 0;
  bool left = true;
};

enum class ReplacementScope { All, SameSide, CrossSide };

// Exact Gini gain of a routed multiset; nullopt when a child is empty.
std::optional<double> routed_gain(std::span<const RoutedLabel> samples);

// Max |F(S) - F(S')| over every single-sample replacement S' within `scope`.
// Replacement labels range over [0, alphabet); 0 means one past the largest label.
double brute_force_sensitivity(std::span<const RoutedLabel> samples,
                               ReplacementScope scope = ReplacementScope::All, int alphabet = 0);

}  // namespace mist
