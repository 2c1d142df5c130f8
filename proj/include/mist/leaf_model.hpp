#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "mist/quantile_sketch.hpp"
#include "mist/types.hpp"

namespace mist {

// Welford accumulator. `count` may be fractional after inheritance.
struct ClassFeatureStat {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void observe(double x);
  // Population variance m2 / count, 0 for an empty accumulator.
  double variance() const { return count > 0.0 ? m2 / count : 0.0; }
};

struct ClassStats {
  double pseudo = 0.0;       // Dirichlet pseudo-count n_c
  std::uint64_t local = 0;   // samples of this class routed here since leaf creation
  std::vector<ClassFeatureStat> features;
  std::vector<QuantileSketch> sketches;  // empty until the first local sample

  bool has_mass() const { return pseudo > 0.0 || local > 0; }
};

using ClassScores = std::map<ClassId, double>;

class LeafStats {
 public:
  LeafStats() = default;
  LeafStats(std::size_t dim, std::size_t sketch_k, std::uint64_t seed)
      : dim_(dim), sketch_k_(sketch_k), seed_(seed) {}

  void observe(const Sample& sample);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t sketch_capacity() const noexcept { return sketch_k_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t n_leaf() const noexcept { return n_leaf_; }
  std::size_t k_local() const;
  double total_mass() const;
  std::size_t sketch_count() const;
  std::size_t retained_items() const;

  const std::map<ClassId, ClassStats>& classes() const noexcept { return classes_; }
  // Direct access for the split projection, which builds child stats from scratch.
  std::map<ClassId, ClassStats>& mutable_classes() noexcept { return classes_; }

 private:
  std::size_t dim_ = 0;
  std::size_t sketch_k_ = 64;
  std::uint64_t seed_ = 0;
  std::uint64_t n_leaf_ = 0;
  std::map<ClassId, ClassStats> classes_;
};

// Laplace-smoothed Dirichlet prior over the classes with mass. When the leaf is
// empty the prior is uniform over `fallback` (and empty if that is empty too).
ClassScores class_prior(const LeafStats& stats, double eps_s,
                        std::span<const ClassId> fallback = {});

// MIST-G log-scores. Throws EmptyLeaf when no class has mass.
ClassScores predict_gaussian(const LeafStats& stats, std::span<const double> x, double eps_s,
                             double variance_floor = 1e-6);

struct SketchLeafParams {
  double beta = 1.0;
  double eps_s = 1.0;
  std::span<const FeatureKind> kinds;  // empty means every feature is continuous
};

// MIST-K log-scores. Classes without sketches are scored by their prior alone.
ClassScores predict_sketch(const LeafStats& stats, std::span<const double> x,
                           const SketchLeafParams& params);

inline constexpr double kIqsHalfWindow = 0.25;

// Value-space width of the rank window [r - 0.25, r + 0.25] around x, or eps_s
// when the window does not contain two distinct quantiles.
double inter_quantile_spacing(const QuantileSketch& sketch, double x, double eps_s);

// Smoothed local density (dF + eps) / (2h + eps).
double sketch_likelihood(double cdf_diff, double h, double eps_s);

// Highest score wins; ties go to the lowest class id. kUnknownClass when empty.
ClassId argmax(const ClassScores& scores);

}  // namespace mist
