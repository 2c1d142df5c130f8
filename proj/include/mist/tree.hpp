#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "mist/inheritance.hpp"
#include "mist/leaf_model.hpp"
#include "mist/split_engine.hpp"
#include "mist/types.hpp"

namespace mist {

enum class LeafPredictor { GaussianLeaf, SketchLeaf, MajorityVote };

struct TreeConfig {
  SplitCriterion criterion;
  InheritanceConfig inheritance;
  LeafPredictor predictor = LeafPredictor::GaussianLeaf;
  std::size_t sketch_capacity = 64;
  double beta = 1.0;
  double eps_s = 1.0;
  double variance_floor = 1e-6;
  std::uint64_t seed = 0;
  std::vector<FeatureKind> feature_kinds;  // empty means all continuous

  void validate() const;
};

using NodeId = std::size_t;

struct InternalNode {
  std::size_t feature = 0;
  double threshold = 0.0;
  NodeId left = 0;
  NodeId right = 0;
  std::map<ClassId, double> mass;  // class masses frozen when the node split
};

struct TreeDiagnostics {
  std::size_t leaves = 1;
  std::size_t cumulative_splits = 0;
  double weighted_gini = 0.0;
  double k_local_mean = 0.0;
  std::size_t retained_sketch_items = 0;
};

struct SplitEvent {
  std::uint64_t step = 0;  // 1-based index of the update that split
  NodeId leaf = 0;
  std::uint64_t n_leaf = 0;
  std::size_t feature = 0;
  double threshold = 0.0;
  double sketched_gain = 0.0;
  double second_best_gain = 0.0;
  double radius = 0.0;
  bool by_tie_rule = false;
};

struct UpdateResult {
  ClassId prediction = kUnknownClass;
  bool split = false;
};

class MistTree {
 public:
  MistTree(std::size_t dim, TreeConfig config = {});

  // Predicts from the current state, then learns the sample.
  UpdateResult update(const Sample& sample);
  ClassId predict(std::span<const double> x) const;
  NodeId route(std::span<const double> x) const;

  TreeDiagnostics diagnostics() const;
  const std::vector<SplitEvent>& split_events() const noexcept { return events_; }

  std::size_t dim() const noexcept { return dim_; }
  const TreeConfig& config() const noexcept { return config_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  bool is_leaf(NodeId id) const;
  const LeafStats& leaf_stats(NodeId id) const;
  const InternalNode& internal(NodeId id) const;
  std::optional<NodeId> parent(NodeId id) const;
  std::vector<NodeId> leaves() const;
  const std::map<ClassId, std::uint64_t>& global_counts() const noexcept { return global_counts_; }

  // Number of scalars held by the model: sketch items, accumulators and split records.
  std::size_t logical_size() const;

 private:
  struct Node {
    std::variant<LeafStats, InternalNode> body;
    std::optional<NodeId> parent;
  };

  ClassId predict_at(NodeId leaf, std::span<const double> x) const;
  void split(NodeId id, const SplitDecision& decision);
  FeatureKind kind(std::size_t feature) const;

  std::size_t dim_;
  TreeConfig config_;
  std::vector<Node> nodes_;
  std::map<ClassId, std::uint64_t> global_counts_;
  std::vector<SplitEvent> events_;
  std::uint64_t steps_ = 0;
};

}  // namespace mist
