#include "mist/theory.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <map>
#include <random>

#include "mist/error.hpp"
#include "mist/normal.hpp"

namespace mist::theory {

namespace {

std::vector<RoutedLabel> expand(std::size_t l1, std::size_t l0, std::size_t r1, std::size_t r0) {
  std::vector<RoutedLabel> s;
  s.insert(s.end(), l1, RoutedLabel{1, true});
  s.insert(s.end(), l0, RoutedLabel{0, true});
  s.insert(s.end(), r1, RoutedLabel{1, false});
  s.insert(s.end(), r0, RoutedLabel{0, false});
  return s;
}

// Calls f(l1, l0, r1, r0) for every two-class count table of total n with both children non-empty.
template <typename F>
void for_each_binary_table(std::size_t n, F&& f) {
  for (std::size_t nl = 1; nl < n; ++nl)
    for (std::size_t l1 = 0; l1 <= nl; ++l1)
      for (std::size_t r1 = 0; r1 <= n - nl; ++r1) f(l1, nl - l1, r1, n - nl - r1);
}

void record(SensitivityReport& rep, SensitivityRow row) {
  const bool bad = rep.strict ? row.max_scaled >= rep.bound : row.max_scaled > rep.bound + 1e-12;
  if (bad) ++rep.violations;
  rep.rows.push_back(row);
}

double integrate(const auto& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-15);
}

}  // namespace

double SensitivityReport::max_scaled() const {
  double m = 0.0;
  for (const auto& r : rows) m = std::max(m, r.max_scaled);
  return m;
}

SensitivityReport exhaustive_binary_sensitivity(std::size_t max_n) {
  SensitivityReport rep;
  rep.bound = 4.0;
  for (std::size_t n = 2; n <= max_n; ++n) {
    SensitivityRow row{n, 0, 0.0};
    for_each_binary_table(n, [&](std::size_t l1, std::size_t l0, std::size_t r1, std::size_t r0) {
      const auto s = expand(l1, l0, r1, r0);
      row.max_scaled = std::max(row.max_scaled, static_cast<double>(n) * brute_force_sensitivity(s, ReplacementScope::All, 3));
      ++row.configurations;
    });
    record(rep, row);
  }
  return rep;
}

SensitivityReport random_multiclass_sensitivity(std::size_t trials, std::size_t max_k, std::size_t max_n,
                                                std::uint64_t seed) {
  if (max_k < 2 || max_n < 2) throw InvalidInput("random sensitivity needs at least two classes and two samples");
  SensitivityReport rep;
  rep.bound = 4.0;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_k(2, max_k);
  std::uniform_int_distribution<std::size_t> pick_n(2, max_n);
  std::map<std::size_t, SensitivityRow> by_n;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t k = pick_k(rng);
    const std::size_t n = pick_n(rng);
    std::uniform_int_distribution<int> label(0, static_cast<int>(k) - 1);
    std::vector<RoutedLabel> s(n);
    for (auto& r : s) r = {label(rng), (rng() & 1U) != 0};
    s[0].left = true;
    s[1].left = false;
    auto& row = by_n[n];
    row.n = n;
    ++row.configurations;
    row.max_scaled = std::max(row.max_scaled,
                              static_cast<double>(n) * brute_force_sensitivity(s, ReplacementScope::All, static_cast<int>(k)));
  }
  for (const auto& [n, row] : by_n) record(rep, row);
  return rep;
}

SensitivityReport exhaustive_cross_routing(std::size_t max_n) {
  SensitivityReport rep;
  rep.bound = 2.0;
  rep.strict = true;
  for (std::size_t n = 2; n <= max_n; ++n) {
    SensitivityRow row{n, 0, 0.0};
    for_each_binary_table(n, [&](std::size_t l1, std::size_t l0, std::size_t r1, std::size_t r0) {
      const auto s = expand(l1, l0, r1, r0);
      const auto base = routed_gain(s);
      auto work = s;
      for (std::size_t i = 0; i < s.size(); ++i) {
        work[i] = RoutedLabel{1 - s[i].label, !s[i].left};
        if (const auto g = routed_gain(work))
          row.max_scaled = std::max(row.max_scaled, static_cast<double>(n) * std::abs(*base - *g));
        work[i] = s[i];
      }
      ++row.configurations;
    });
    record(rep, row);
  }
  return rep;
}

double tightness_formula(std::size_t n, std::size_t m) {
  const double nd = static_cast<double>(n), md = static_cast<double>(m);
  return 2.0 * (nd - md) * (2.0 * md - 1.0) / (nd * md);
}

TightnessPoint tightness(std::size_t n) {
  if (n < 4) throw InvalidInput("tightness construction needs n >= 4");
  const auto m = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n) / 2.0)));
  auto s = expand(m, 0, 0, n - m);
  const double before = *routed_gain(s);
  s[0].label = 0;
  const double after = *routed_gain(s);
  return {n, m, static_cast<double>(n) * std::abs(before - after), tightness_formula(n, m)};
}

MomentCheck truncated_moment_check(std::size_t points, double zeta_lo, double zeta_hi, double mu, double sigma) {
  if (points < 2 || !(zeta_hi > zeta_lo) || !(sigma > 0.0)) throw InvalidInput("bad moment check grid");
  MomentCheck out;
  const double reach = 40.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double zeta = zeta_lo + (zeta_hi - zeta_lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    const double v = mu + sigma * zeta;
    for (Side side : {Side::Left, Side::Right}) {
      const double a = side == Side::Left ? std::min(zeta, 0.0) - reach : zeta;
      const double b = side == Side::Left ? zeta : std::max(zeta, 0.0) + reach;
      const double mass = integrate([](double z) { return normal::pdf(z); }, a, b);
      const double m1 = integrate([](double z) { return z * normal::pdf(z); }, a, b) / mass;
      const double c2 = integrate([m1](double z) { return (z - m1) * (z - m1) * normal::pdf(z); }, a, b) / mass;
      const Moments got = truncated_moments(mu, sigma, v, side);
      out.max_mean_error = std::max(out.max_mean_error, std::abs(got.mean - (mu + sigma * m1)));
      out.max_variance_error = std::max(out.max_variance_error, std::abs(got.variance - sigma * sigma * c2));
      if (got.variance < 0.0 || got.variance > sigma * sigma) out.variance_in_range = false;
      ++out.points;
    }
  }
  return out;
}

DirichletCheck dirichlet_variance_check(double s0, std::size_t draws, std::uint64_t seed) {
  if (!(s0 > 0.0) || draws < 2) throw InvalidInput("dirichlet check needs positive mass and at least two draws");
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> priors{{s0 / 2.0, s0 / 2.0}};
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  for (std::size_t k : {3, 4, 5}) {
    std::vector<double> w(k);
    double total = 0.0;
    for (auto& x : w) total += (x = unit(rng));
    for (auto& x : w) x *= s0 / total;
    priors.push_back(w);
  }

  DirichletCheck out{s0, draws, 0.0, 1.0 / (4.0 * (s0 + 1.0))};
  for (const auto& beta : priors) {
    std::vector<std::gamma_distribution<double>> gammas;
    for (double b : beta) gammas.emplace_back(b, 1.0);
    std::vector<double> sum(beta.size(), 0.0), sum_sq(beta.size(), 0.0), theta(beta.size());
    for (std::size_t d = 0; d < draws; ++d) {
      double total = 0.0;
      for (std::size_t c = 0; c < beta.size(); ++c) total += (theta[c] = gammas[c](rng));
      for (std::size_t c = 0; c < beta.size(); ++c) {
        const double p = theta[c] / total;
        sum[c] += p;
        sum_sq[c] += p * p;
      }
    }
    const double nd = static_cast<double>(draws);
    for (std::size_t c = 0; c < beta.size(); ++c) {
      const double mean = sum[c] / nd;
      const double var = (sum_sq[c] - nd * mean * mean) / (nd - 1.0);
      out.max_variance = std::max(out.max_variance, var);
    }
  }
  return out;
}

nlohmann::json to_json(const SensitivityReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"n", row.n}, {"configurations", row.configurations}, {"max_scaled", row.max_scaled}});
  return {{"bound", r.bound}, {"strict", r.strict}, {"max_scaled", r.max_scaled()},
          {"violations", r.violations}, {"rows", rows}};
}

nlohmann::json to_json(const TightnessPoint& p) {
  return {{"n", p.n}, {"m", p.m}, {"measured", p.measured}, {"formula", p.formula}};
}

nlohmann::json to_json(const MomentCheck& c) {
  return {{"points", c.points}, {"max_mean_error", c.max_mean_error},
          {"max_variance_error", c.max_variance_error}, {"variance_in_range", c.variance_in_range}};
}

nlohmann::json to_json(const DirichletCheck& c) {
  return {{"s0", c.s0}, {"draws", c.draws}, {"max_variance", c.max_variance}, {"bound", c.bound}};
}

}  // namespace mist::theory
