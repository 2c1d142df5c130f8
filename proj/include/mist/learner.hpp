#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>

#include "mist/tree.hpp"
#include "mist/types.hpp"

namespace mist {

// Common interface for everything the protocol runner can stream data through.
class Learner {
 public:
  virtual ~Learner() = default;

  virtual std::string name() const = 0;
  virtual ClassId predict(std::span<const double> x) const = 0;
  virtual void learn(const Sample& sample) = 0;

  // Prequential step: the returned prediction uses only the state before `sample`.
  virtual ClassId test_then_train(const Sample& sample) {
    const ClassId p = predict(sample.x);
    learn(sample);
    return p;
  }

  // Non-null for tree learners, used for diagnostics and the sketch audit.
  virtual const MistTree* tree() const { return nullptr; }
};

class TreeLearner final : public Learner {
 public:
  TreeLearner(std::string name, std::size_t dim, TreeConfig config)
      : name_(std::move(name)), tree_(dim, std::move(config)) {}

  std::string name() const override { return name_; }
  ClassId predict(std::span<const double> x) const override { return tree_.predict(x); }
  void learn(const Sample& sample) override { tree_.update(sample); }
  ClassId test_then_train(const Sample& sample) override { return tree_.update(sample).prediction; }
  const MistTree* tree() const override { return &tree_; }

 private:
  std::string name_;
  MistTree tree_;
};

}  // namespace mist
