#include "mist/tree.hpp"

#include <algorithm>
#include <cmath>

#include "mist/error.hpp"

namespace mist {

void TreeConfig::validate() const {
  criterion.validate();
  inheritance.validate();
  if (sketch_capacity < 2) throw ConfigError("sketch capacity must be at least 2");
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  if (!(eps_s > 0.0)) throw ConfigError("eps_s must be positive");
  if (!(variance_floor > 0.0)) throw ConfigError("variance floor must be positive");
}

MistTree::MistTree(std::size_t dim, TreeConfig config) : dim_(dim), config_(std::move(config)) {
  if (dim_ == 0) throw ConfigError("tree dimension must be positive");
  config_.validate();
  if (!config_.feature_kinds.empty() && config_.feature_kinds.size() != dim_)
    throw ConfigError("feature kinds do not match the tree dimension");
  nodes_.push_back(Node{LeafStats(dim_, config_.sketch_capacity, mix_seed(config_.seed, 0)), std::nullopt});
}

FeatureKind MistTree::kind(std::size_t feature) const {
  return config_.feature_kinds.empty() ? FeatureKind::Continuous : config_.feature_kinds[feature];
}

bool MistTree::is_leaf(NodeId id) const { return std::holds_alternative<LeafStats>(nodes_.at(id).body); }

const LeafStats& MistTree::leaf_stats(NodeId id) const { return std::get<LeafStats>(nodes_.at(id).body); }

const InternalNode& MistTree::internal(NodeId id) const { return std::get<InternalNode>(nodes_.at(id).body); }

std::optional<NodeId> MistTree::parent(NodeId id) const { return nodes_.at(id).parent; }

std::vector<NodeId> MistTree::leaves() const {
  std::vector<NodeId> out;
  for (NodeId i = 0; i < nodes_.size(); ++i)
    if (is_leaf(i)) out.push_back(i);
  return out;
}

NodeId MistTree::route(std::span<const double> x) const {
  if (x.size() != dim_) throw InvalidInput("sample dimension does not match the tree");
  NodeId id = 0;
  while (const auto* node = std::get_if<InternalNode>(&nodes_[id].body))
    id = x[node->feature] <= node->threshold ? node->left : node->right;
  return id;
}

ClassId MistTree::predict_at(NodeId leaf, std::span<const double> x) const {
  const LeafStats& stats = leaf_stats(leaf);
  if (stats.k_local() > 0) {
    switch (config_.predictor) {
      case LeafPredictor::GaussianLeaf:
        return argmax(predict_gaussian(stats, x, config_.eps_s, config_.variance_floor));
      case LeafPredictor::SketchLeaf:
        return argmax(predict_sketch(stats, x, {config_.beta, config_.eps_s, config_.feature_kinds}));
      case LeafPredictor::MajorityVote: {
        ClassScores mass;
        for (const auto& [c, cls] : stats.classes())
          if (cls.has_mass()) mass[c] = cls.pseudo;
        return argmax(mass);
      }
    }
  }
  // Empty leaf: use the frozen class masses of the nearest ancestor that has any.
  for (auto up = nodes_[leaf].parent; up; up = nodes_[*up].parent) {
    ClassScores mass;
    for (const auto& [c, m] : internal(*up).mass)
      if (m > 0.0) mass[c] = m;
    if (!mass.empty()) return argmax(mass);
  }
  ClassScores global;
  for (const auto& [c, n] : global_counts_) global[c] = static_cast<double>(n);
  return argmax(global);
}

ClassId MistTree::predict(std::span<const double> x) const {
  const NodeId leaf = route(x);
  if (global_counts_.empty()) return kUnknownClass;
  return predict_at(leaf, x);
}

UpdateResult MistTree::update(const Sample& sample) {
  const NodeId leaf = route(sample.x);
  if (sample.y < 0) throw InvalidInput("class labels must be non-negative");
  UpdateResult result;
  result.prediction = global_counts_.empty() ? kUnknownClass : predict_at(leaf, sample.x);

  auto& stats = std::get<LeafStats>(nodes_[leaf].body);
  stats.observe(sample);
  ++global_counts_[sample.y];
  ++steps_;

  const auto& crit = config_.criterion;
  if (stats.n_leaf() >= crit.grace_period && (stats.n_leaf() - crit.grace_period) % crit.check_interval == 0) {
    if (auto decision = gap_test(stats, crit, config_.feature_kinds)) {
      split(leaf, *decision);
      result.split = true;
    }
  }
  return result;
}

void MistTree::split(NodeId id, const SplitDecision& decision) {
  const auto& cand = decision.best;
  const LeafStats& stats = leaf_stats(id);

  InternalNode node;
  node.feature = cand.feature;
  node.threshold = cand.threshold;
  for (const auto& [c, cls] : stats.classes())
    if (cls.has_mass()) node.mass[c] = cls.pseudo;

  const NodeId left_id = nodes_.size();
  const NodeId right_id = left_id + 1;
  auto [left, right] = project_split(stats, cand.feature, cand.threshold, config_.inheritance, kind(cand.feature),
                                     mix_seed(config_.seed, left_id), mix_seed(config_.seed, right_id));

  events_.push_back(SplitEvent{steps_, id, stats.n_leaf(), cand.feature, cand.threshold, cand.gain,
                               decision.second_best_gain, decision.radius, decision.by_tie_rule});

  node.left = left_id;
  node.right = right_id;
  nodes_[id].body = std::move(node);
  nodes_.push_back(Node{std::move(left), id});
  nodes_.push_back(Node{std::move(right), id});
}

TreeDiagnostics MistTree::diagnostics() const {
  TreeDiagnostics d;
  d.leaves = 0;
  d.cumulative_splits = events_.size();
  double total_mass = 0.0;
  double weighted = 0.0;
  double k_local_sum = 0.0;
  for (NodeId i = 0; i < nodes_.size(); ++i) {
    if (!is_leaf(i)) continue;
    const LeafStats& stats = leaf_stats(i);
    ++d.leaves;
    k_local_sum += static_cast<double>(stats.k_local());
    d.retained_sketch_items += stats.retained_items();
    std::vector<double> masses;
    for (const auto& [c, cls] : stats.classes())
      if (cls.pseudo > 0.0) masses.push_back(cls.pseudo);
    const double mass = stats.total_mass();
    if (mass > 0.0) {
      weighted += mass * gini(masses);
      total_mass += mass;
    }
  }
  d.weighted_gini = total_mass > 0.0 ? weighted / total_mass : 0.0;
  d.k_local_mean = d.leaves ? k_local_sum / static_cast<double>(d.leaves) : 0.0;
  return d;
}

std::size_t MistTree::logical_size() const {
  std::size_t total = global_counts_.size() * 2;
  for (const auto& node : nodes_) {
    if (const auto* stats = std::get_if<LeafStats>(&node.body)) {
      total += stats->retained_items();
      for (const auto& [c, cls] : stats->classes()) total += 2 + 3 * cls.features.size();
    } else {
      total += 4 + 2 * std::get<InternalNode>(node.body).mass.size();
    }
  }
  return total;
}

}  // namespace mist
