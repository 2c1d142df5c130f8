#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <utility>

#include "mist/leaf_model.hpp"
#include "mist/types.hpp"

namespace mist {

enum class InheritanceMode { TruncatedGaussian, SketchQuantile, None };
enum class Side { Left, Right };

struct InheritanceConfig {
  double alpha = 0.6;
  InheritanceMode mode = InheritanceMode::TruncatedGaussian;
  double clip_lo = 0.01;
  double clip_hi = 0.99;
  // Classes whose inherited mass falls below this are not carried into a child.
  double min_mass = 1.0;
  double variance_floor = 1e-6;

  void validate() const;
};

// Beyond this |zeta| the truncation is treated as degenerate.
inline constexpr double kDegenerateZeta = 8.0;

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

// Mean and variance of N(mu, sigma^2) conditioned on x <= v (Left) or x > v (Right).
Moments truncated_moments(double mu, double sigma, double v, Side side, double variance_floor = 1e-6);

// Fraction of a class's mass routed left, Phi((v - mu) / sigma) with the point-mass
// convention when sigma is zero.
double left_fraction(double mu, double sigma, double v);

// Child statistics after splitting `parent` at `feature <= v`. Child sketches are empty
// and child n_leaf is zero.
std::pair<LeafStats, LeafStats> project_split(const LeafStats& parent, std::size_t feature, double v,
                                              const InheritanceConfig& cfg, FeatureKind kind,
                                              std::uint64_t left_seed, std::uint64_t right_seed);

// Per-class child means from the parent sketch: F^-1(r/2) and F^-1(r + (1 - r)/2),
// with both ranks clipped to [clip_lo, clip_hi].
std::map<ClassId, std::pair<double, double>> sketch_inherit_means(const LeafStats& parent, std::size_t feature,
                                                                  double v, const InheritanceConfig& cfg);

}  // namespace mist
