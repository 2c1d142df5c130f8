#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace mist {

// Compaction coin. `Fair` flips a fresh coin for every compaction.
// `Alternating` flips once per level and then alternates the kept parity on
// each later compaction of that level, so consecutive errors tend to cancel.
enum class CompactionCoin { Fair, Alternating };

struct SketchOptions {
  double level_decay = 2.0 / 3.0;
  CompactionCoin coin = CompactionCoin::Alternating;
};

// KLL quantile sketch with capacity parameter k. Retains at most 3k items.
class QuantileSketch {
 public:
  explicit QuantileSketch(std::size_t k = 64, std::uint64_t seed = 0, SketchOptions options = {});

  void update(double value);

  // Estimated fraction of inserted items <= value.
  double rank(double value) const;
  // rank() at each of `values`, which must be sorted ascending, in one pass.
  std::vector<double> ranks(const std::vector<double>& sorted_values) const;
  // Smallest retained item whose estimated rank is >= r.
  double quantile(double r) const;

  bool empty() const noexcept { return count_ == 0; }
  std::uint64_t count() const noexcept { return count_; }
  std::size_t capacity() const noexcept { return k_; }
  std::size_t retained() const noexcept { return retained_; }
  std::size_t max_retained() const noexcept { return 3 * k_; }
  double min() const;
  double max() const;

  // Level h holds sorted items of weight 2^h.
  const std::vector<std::vector<double>>& levels() const noexcept { return levels_; }
  const SketchOptions& options() const noexcept { return options_; }

 private:
  std::size_t level_capacity(std::size_t level) const;
  void compress();
  void compact_level(std::size_t level);
  bool next_coin(std::size_t level);
  void build_view() const;

  std::size_t k_;
  SketchOptions options_;
  std::vector<std::vector<double>> levels_;
  std::vector<std::int8_t> next_parity_;  // -1 until the level's first compaction
  std::uint64_t count_ = 0;
  std::size_t retained_ = 0;
  double min_ = 0.0;
  double max_ = 0.0;
  std::mt19937_64 rng_;

  // Sorted merged view used by queries, rebuilt lazily after updates.
  struct ViewItem {
    double value;
    double weight;
    double cum;  // total weight of items up to and including this one
  };
  mutable std::vector<ViewItem> view_;
  mutable bool view_valid_ = false;
};

}  // namespace mist
