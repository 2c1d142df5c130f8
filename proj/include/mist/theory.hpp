#pragma once

#include <cstddef>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <vector>

#include "mist/inheritance.hpp"
#include "mist/split_engine.hpp"

// Numerical checks of the split-gain sensitivity bounds, the truncated-moment
// projection and the Dirichlet variance bound.
namespace mist::theory {

struct SensitivityRow {
  std::size_t n = 0;
  std::size_t configurations = 0;
  double max_scaled = 0.0;  // max over configurations of n * |dF|
};

struct SensitivityReport {
  double bound = 0.0;  // on n * |dF|
  bool strict = false;  // whether the bound must hold strictly
  std::vector<SensitivityRow> rows;
  std::size_t violations = 0;

  double max_scaled() const;
};

// Every two-class configuration (up to permutation, which leaves the gain unchanged)
// for 2 <= n <= max_n. Replacement labels range over a third unseen class too.
SensitivityReport exhaustive_binary_sensitivity(std::size_t max_n);

// Random configurations with 2..max_k classes and 2..max_n samples.
SensitivityReport random_multiclass_sensitivity(std::size_t trials, std::size_t max_k, std::size_t max_n,
                                                std::uint64_t seed);

// Replacements that move a sample to the other child while changing its label,
// exhaustively over two-class configurations. The bound is n * |dF| < 2.
SensitivityReport exhaustive_cross_routing(std::size_t max_n);

struct TightnessPoint {
  std::size_t n = 0;
  std::size_t m = 0;
  double measured = 0.0;  // n * |dF| from the gain itself
  double formula = 0.0;   // 2(n - m)(2m - 1) / (n m)
};

// The left child holds m = floor(sqrt(n / 2)) samples of class 1, the right child
// the rest as class 0, and one left sample flips to class 0.
TightnessPoint tightness(std::size_t n);
double tightness_formula(std::size_t n, std::size_t m);

struct MomentCheck {
  std::size_t points = 0;
  double max_mean_error = 0.0;
  double max_variance_error = 0.0;
  bool variance_in_range = true;  // 0 <= var' <= sigma^2 at every point
};

// Compares truncated_moments against adaptive quadrature of the conditional
// moments for zeta on an even grid over [zeta_lo, zeta_hi], both sides.
MomentCheck truncated_moment_check(std::size_t points = 200, double zeta_lo = -5.0, double zeta_hi = 5.0,
                                   double mu = 0.0, double sigma = 1.0);

struct DirichletCheck {
  double s0 = 0.0;
  std::size_t draws = 0;
  double max_variance = 0.0;  // largest per-class Monte-Carlo variance across the tested priors
  double bound = 0.0;         // 1 / (4 (s0 + 1))
};

// Draws class-probability vectors from Dirichlet priors with total mass s0, one
// balanced two-class prior plus random splits over up to five classes, and
// records the largest per-class sample variance.
DirichletCheck dirichlet_variance_check(double s0, std::size_t draws, std::uint64_t seed);

nlohmann::json to_json(const SensitivityReport& r);
nlohmann::json to_json(const TightnessPoint& p);
nlohmann::json to_json(const MomentCheck& c);
nlohmann::json to_json(const DirichletCheck& c);

}  // namespace mist::theory
