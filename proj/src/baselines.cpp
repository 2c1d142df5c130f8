#include "mist/baselines.hpp"

#include <cmath>
#include <limits>

#include "mist/error.hpp"

namespace mist {

GaussianDiscriminant::GaussianDiscriminant(DiscriminantKind kind, std::size_t dim, double shrinkage)
    : kind_(kind), dim_(dim), shrinkage_(shrinkage) {
  if (dim_ == 0) throw ConfigError("discriminant dimension must be positive");
  if (!(shrinkage_ > 0.0)) throw ConfigError("shrinkage must be positive");
  if (kind_ == DiscriminantKind::SLDA) pooled_scatter_ = Eigen::MatrixXd::Zero(dim_, dim_);
}

std::string GaussianDiscriminant::name() const {
  switch (kind_) {
    case DiscriminantKind::NCM: return "ncm";
    case DiscriminantKind::SLDA: return "slda";
    case DiscriminantKind::SQDA: return "sqda";
  }
  return "unknown";
}

void GaussianDiscriminant::learn(const Sample& sample) {
  if (sample.x.size() != dim_) throw InvalidInput("sample dimension does not match the model");
  const Eigen::Map<const Eigen::VectorXd> x(sample.x.data(), static_cast<Eigen::Index>(dim_));
  auto [it, inserted] = classes_.try_emplace(sample.y);
  ClassModel& m = it->second;
  if (inserted) {
    m.mean = Eigen::VectorXd::Zero(dim_);
    if (kind_ == DiscriminantKind::SQDA) m.scatter = Eigen::MatrixXd::Zero(dim_, dim_);
  }
  m.n += 1.0;
  const Eigen::VectorXd before = x - m.mean;
  m.mean += before / m.n;
  const Eigen::VectorXd after = x - m.mean;
  total_ += 1.0;
  switch (kind_) {
    case DiscriminantKind::NCM:
      break;
    case DiscriminantKind::SLDA:
      pooled_scatter_.noalias() += before * after.transpose();
      shared_factor_.reset();
      break;
    case DiscriminantKind::SQDA:
      m.scatter.noalias() += before * after.transpose();
      m.factor.reset();
      break;
  }
}

const GaussianDiscriminant::ClassModel& GaussianDiscriminant::model(ClassId c) const {
  auto it = classes_.find(c);
  if (it == classes_.end()) throw InvalidInput("unknown class");
  return it->second;
}

double GaussianDiscriminant::count(ClassId c) const { return model(c).n; }

Eigen::VectorXd GaussianDiscriminant::mean(ClassId c) const { return model(c).mean; }

Eigen::MatrixXd GaussianDiscriminant::class_covariance(ClassId c) const {
  if (kind_ != DiscriminantKind::SQDA) throw InvalidInput("per-class covariance is only kept by SQDA");
  const ClassModel& m = model(c);
  return m.scatter / m.n;
}

Eigen::MatrixXd GaussianDiscriminant::shared_covariance() const {
  if (kind_ != DiscriminantKind::SLDA) throw InvalidInput("shared covariance is only kept by SLDA");
  if (total_ <= 0.0) return Eigen::MatrixXd::Zero(dim_, dim_);
  return pooled_scatter_ / total_;
}

Eigen::MatrixXd GaussianDiscriminant::regularised_covariance(std::optional<ClassId> c) const {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(dim_, dim_);
  switch (kind_) {
    case DiscriminantKind::NCM:
      return eye;
    case DiscriminantKind::SLDA:
      return shared_covariance() + shrinkage_ * eye;
    case DiscriminantKind::SQDA:
      if (!c) throw InvalidInput("SQDA covariance needs a class");
      return class_covariance(*c) + shrinkage_ * eye;
  }
  return eye;
}

ClassId GaussianDiscriminant::predict(std::span<const double> xs) const {
  if (xs.size() != dim_) throw InvalidInput("sample dimension does not match the model");
  if (classes_.empty()) return kUnknownClass;
  const Eigen::Map<const Eigen::VectorXd> x(xs.data(), static_cast<Eigen::Index>(dim_));

  ClassId best = kUnknownClass;
  double best_score = -std::numeric_limits<double>::infinity();
  auto consider = [&](ClassId c, double score) {
    if (best == kUnknownClass || score > best_score) {
      best = c;
      best_score = score;
    }
  };

  switch (kind_) {
    case DiscriminantKind::NCM:
      for (const auto& [c, m] : classes_) consider(c, -(x - m.mean).squaredNorm());
      break;
    case DiscriminantKind::SLDA: {
      if (!shared_factor_) shared_factor_.emplace(regularised_covariance());
      for (const auto& [c, m] : classes_) {
        const Eigen::VectorXd w = shared_factor_->solve(m.mean);
        consider(c, w.dot(x) - 0.5 * w.dot(m.mean));
      }
      break;
    }
    case DiscriminantKind::SQDA:
      for (const auto& [c, m] : classes_) {
        if (!m.factor) {
          m.factor.emplace(regularised_covariance(c));
          m.log_det = 2.0 * m.factor->matrixL().toDenseMatrix().diagonal().array().log().sum();
        }
        const Eigen::VectorXd diff = x - m.mean;
        const double quad = diff.dot(m.factor->solve(diff));
        consider(c, -0.5 * m.log_det - 0.5 * quad);
      }
      break;
  }
  return best;
}

}  // namespace mist
