#include "pareto_filter/noise_model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace pareto_filter {

MatrixXd psd_factor(const MatrixXd& S) {
  if (S.rows() != S.cols()) throw DimensionError("psd_factor: matrix must be square");
  if (!is_symmetric(S, 1e-8)) throw ValidationError("psd_factor: matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(S));
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -1e-9 * scale)
    throw ValidationError("psd_factor: matrix is not PSD");
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

NoiseModel NoiseModel::gaussian(const MatrixXd& covariance) {
  NoiseModel m;
  m.kind_ = Kind::kGaussian;
  m.dim_ = covariance.rows();
  m.second_moment_ = symmetrize(covariance);
  m.factors_.push_back(psd_factor(covariance));
  return m;
}

NoiseModel NoiseModel::mixture(const std::vector<MixtureComponent>& components) {
  if (components.empty()) throw ValidationError("NoiseModel: mixture needs >= 1 component");
  NoiseModel m;
  m.kind_ = Kind::kMixture;
  m.dim_ = components.front().mean.size();

  double total = 0.0;
  m.second_moment_ = MatrixXd::Zero(m.dim_, m.dim_);
  for (const auto& c : components) {
    if (!(c.weight > 0.0)) throw ValidationError("NoiseModel: mixture weights must be positive");
    if (c.mean.size() != m.dim_ || c.covariance.rows() != m.dim_ || c.covariance.cols() != m.dim_)
      throw DimensionError("NoiseModel: mixture component dimension mismatch");
    total += c.weight;
    m.second_moment_ += c.weight * (c.covariance + c.mean * c.mean.transpose());
    m.factors_.push_back(psd_factor(c.covariance));
    m.cumulative_weights_.push_back(total);
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw ValidationError("NoiseModel: mixture weights must sum to 1, got " +
                          std::to_string(total));
  m.second_moment_ = symmetrize(m.second_moment_);
  m.components_ = components;
  return m;
}

NoiseModel NoiseModel::empirical(const std::vector<VectorXd>& samples) {
  if (samples.empty()) throw ValidationError("NoiseModel: empirical table must be non-empty");
  NoiseModel m;
  m.kind_ = Kind::kEmpirical;
  m.dim_ = samples.front().size();
  m.second_moment_ = MatrixXd::Zero(m.dim_, m.dim_);
  for (const auto& s : samples) {
    if (s.size() != m.dim_)
      throw DimensionError("NoiseModel: empirical samples must share one dimension");
    m.second_moment_ += s * s.transpose();
  }
  m.second_moment_ = symmetrize(m.second_moment_ / static_cast<double>(samples.size()));
  m.samples_ = samples;
  return m;
}

VectorXd NoiseModel::sample(SplitMix64& rng) const {
  switch (kind_) {
    case Kind::kGaussian: {
      VectorXd z(dim_);
      for (Eigen::Index i = 0; i < dim_; ++i) z(i) = rng.next_gaussian();
      return factors_.front() * z;
    }
    case Kind::kMixture: {
      const double u = rng.next_uniform();
      std::size_t idx = 0;
      while (idx + 1 < cumulative_weights_.size() && u >= cumulative_weights_[idx]) ++idx;
      VectorXd z(dim_);
      for (Eigen::Index i = 0; i < dim_; ++i) z(i) = rng.next_gaussian();
      return components_[idx].mean + factors_[idx] * z;
    }
    case Kind::kEmpirical: {
      const std::size_t idx = static_cast<std::size_t>(
          rng.next_uniform() * static_cast<double>(samples_.size()));
      return samples_[std::min(idx, samples_.size() - 1)];
    }
  }
  throw Error("NoiseModel: unreachable");
}

}  // namespace pareto_filter
