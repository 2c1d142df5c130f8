#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cstddef>
#include <map>
#include <optional>

#include "mist/learner.hpp"

namespace mist {

enum class DiscriminantKind { NCM, SLDA, SQDA };

// Streaming Gaussian discriminant. Means and scatter matrices are accumulated with
// rank-1 Welford updates; shrinkage is added and the factorisation refreshed only
// when a prediction needs it.
class GaussianDiscriminant final : public Learner {
 public:
  GaussianDiscriminant(DiscriminantKind kind, std::size_t dim, double shrinkage = 1e-4);

  std::string name() const override;
  ClassId predict(std::span<const double> x) const override;
  void learn(const Sample& sample) override;

  DiscriminantKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  double shrinkage() const noexcept { return shrinkage_; }
  std::size_t class_count() const noexcept { return classes_.size(); }

  double count(ClassId c) const;
  Eigen::VectorXd mean(ClassId c) const;
  // Population covariances without shrinkage.
  Eigen::MatrixXd class_covariance(ClassId c) const;
  Eigen::MatrixXd shared_covariance() const;
  // The matrix actually factorised for prediction (covariance + shrinkage * I).
  Eigen::MatrixXd regularised_covariance(std::optional<ClassId> c = std::nullopt) const;

 private:
  struct ClassModel {
    double n = 0.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd scatter;  // SQDA only
    mutable std::optional<Eigen::LLT<Eigen::MatrixXd>> factor;
    mutable double log_det = 0.0;
  };

  const ClassModel& model(ClassId c) const;

  DiscriminantKind kind_;
  std::size_t dim_;
  double shrinkage_;
  std::map<ClassId, ClassModel> classes_;
  double total_ = 0.0;
  Eigen::MatrixXd pooled_scatter_;  // SLDA only
  mutable std::optional<Eigen::LLT<Eigen::MatrixXd>> shared_factor_;
};

}  // namespace mist
