#include "mist/quantile_sketch.hpp"

#include <algorithm>
#include <cmath>

#include "mist/error.hpp"

namespace mist {

QuantileSketch::QuantileSketch(std::size_t k, std::uint64_t seed, SketchOptions options)
    : k_(k), options_(options), levels_(1), next_parity_(1, -1), rng_(seed) {
  if (k_ < 2) throw InvalidInput("sketch capacity must be at least 2");
  if (!(options_.level_decay > 0.0 && options_.level_decay <= 1.0))
    throw InvalidInput("sketch level decay must lie in (0, 1]");
  levels_[0].reserve(k_);
}

std::size_t QuantileSketch::level_capacity(std::size_t level) const {
  const std::size_t depth = levels_.size() - 1 - level;
  const double cap = std::ceil(static_cast<double>(k_) * std::pow(options_.level_decay, depth));
  return std::max<std::size_t>(2, static_cast<std::size_t>(cap));
}

void QuantileSketch::update(double value) {
  if (!std::isfinite(value)) throw InvalidInput("sketch value must be finite");
  if (count_ == 0) {
    min_ = max_ = value;
  } else {
    min_ = std::min(min_, value);
    max_ = std::max(max_, value);
  }
  auto& base = levels_[0];
  base.insert(std::upper_bound(base.begin(), base.end(), value), value);
  ++count_;
  ++retained_;
  view_valid_ = false;
  while (retained_ > max_retained()) compress();
}

// Called only when the 3k budget is exceeded. Level capacities decide which
// level pays: the lowest one at capacity, otherwise the one most full relative
// to its capacity.
void QuantileSketch::compress() {
  for (std::size_t h = 0; h < levels_.size(); ++h) {
    if (levels_[h].size() >= level_capacity(h)) {
      compact_level(h);
      return;
    }
  }
  std::size_t best = 0;
  double best_fill = -1.0;
  for (std::size_t h = 0; h < levels_.size(); ++h) {
    const double fill = static_cast<double>(levels_[h].size()) / static_cast<double>(level_capacity(h));
    if (levels_[h].size() >= 2 && fill > best_fill) {
      best = h;
      best_fill = fill;
    }
  }
  compact_level(best);
}

bool QuantileSketch::next_coin(std::size_t level) {
  if (options_.coin == CompactionCoin::Alternating && next_parity_[level] >= 0) {
    const bool bit = next_parity_[level] != 0;
    next_parity_[level] = bit ? 0 : 1;
    return bit;
  }
  const bool bit = (rng_() >> 63) != 0;
  if (options_.coin == CompactionCoin::Alternating) next_parity_[level] = bit ? 0 : 1;
  return bit;
}

void QuantileSketch::compact_level(std::size_t level) {
  if (level + 1 == levels_.size()) {
    levels_.emplace_back();
    next_parity_.push_back(-1);
  }
  auto& src = levels_[level];
  const std::size_t pairs = src.size() / 2;
  const std::size_t offset = next_coin(level) ? 1 : 0;

  std::vector<double> promoted;
  promoted.reserve(pairs);
  for (std::size_t i = 0; i < pairs; ++i) promoted.push_back(src[2 * i + offset]);

  // An odd buffer keeps its largest item in place.
  if (src.size() % 2 == 1) {
    const double kept = src.back();
    src.assign(1, kept);
  } else {
    src.clear();
  }

  auto& dst = levels_[level + 1];
  const auto mid = static_cast<std::ptrdiff_t>(dst.size());
  dst.insert(dst.end(), promoted.begin(), promoted.end());
  std::inplace_merge(dst.begin(), dst.begin() + mid, dst.end());
  retained_ -= pairs;
}

void QuantileSketch::build_view() const {
  if (view_valid_) return;
  view_.clear();
  view_.reserve(retained_);
  for (std::size_t h = 0; h < levels_.size(); ++h) {
    const double w = std::ldexp(1.0, static_cast<int>(h));
    for (double v : levels_[h]) view_.push_back({v, w, 0.0});
  }
  std::stable_sort(view_.begin(), view_.end(),
                   [](const ViewItem& a, const ViewItem& b) { return a.value < b.value; });
  double cum = 0.0;
  for (auto& item : view_) {
    cum += item.weight;
    item.cum = cum;
  }
  view_valid_ = true;
}

double QuantileSketch::rank(double value) const {
  if (count_ == 0) throw EmptySketch();
  if (value < min_) return 0.0;
  if (value >= max_) return 1.0;
  build_view();
  auto it = std::upper_bound(view_.begin(), view_.end(), value,
                             [](double v, const ViewItem& item) { return v < item.value; });
  if (it == view_.begin()) return 0.0;
  --it;
  return it->cum / static_cast<double>(count_);
}

std::vector<double> QuantileSketch::ranks(const std::vector<double>& sorted_values) const {
  if (count_ == 0) throw EmptySketch();
  build_view();
  std::vector<double> out(sorted_values.size());
  const double n = static_cast<double>(count_);
  std::size_t i = 0;
  double below = 0.0;  // cumulative weight of view items <= the current value
  for (std::size_t q = 0; q < sorted_values.size(); ++q) {
    const double v = sorted_values[q];
    if (q > 0 && v < sorted_values[q - 1]) throw InvalidInput("rank queries must be sorted");
    if (v < min_) {
      out[q] = 0.0;
      continue;
    }
    if (v >= max_) {
      out[q] = 1.0;
      continue;
    }
    while (i < view_.size() && view_[i].value <= v) below = view_[i++].cum;
    out[q] = below / n;
  }
  return out;
}

double QuantileSketch::quantile(double r) const {
  if (count_ == 0) throw EmptySketch();
  if (!(r >= 0.0 && r <= 1.0)) throw InvalidInput("quantile rank must lie in [0, 1]");
  build_view();
  const double target = r * static_cast<double>(count_);
  auto it = std::lower_bound(view_.begin(), view_.end(), target,
                             [](const ViewItem& item, double t) { return item.cum < t; });
  if (it == view_.end()) return view_.back().value;
  return it->value;
}

double QuantileSketch::min() const {
  if (count_ == 0) throw EmptySketch();
  return min_;
}

double QuantileSketch::max() const {
  if (count_ == 0) throw EmptySketch();
  return max_;
}

}  // namespace mist
