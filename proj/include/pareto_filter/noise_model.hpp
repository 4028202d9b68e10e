#pragma once

#include <string>
#include <vector>

#include "pareto_filter/matrix_equations.hpp"
#include "pareto_filter/rng.hpp"

namespace pareto_filter {

// A sampleable zero-parameterized noise distribution: a Gaussian, a Gaussian
// mixture, or an empirical table resampled uniformly with replacement. The
// effective second moment E[v v^T] is fixed at construction; linear filter
// statistics depend on the model only through it.
class NoiseModel {
 public:
  enum class Kind { kGaussian, kMixture, kEmpirical };

  struct MixtureComponent {
    double weight;
    VectorXd mean;
    MatrixXd covariance;
  };

  static NoiseModel gaussian(const MatrixXd& covariance);
  static NoiseModel mixture(const std::vector<MixtureComponent>& components);
  static NoiseModel empirical(const std::vector<VectorXd>& samples);

  Kind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }
  const MatrixXd& second_moment() const { return second_moment_; }

  VectorXd sample(SplitMix64& rng) const;

  /// Gaussian with the same second moment as this model.
  NoiseModel gaussian_equivalent() const { return gaussian(second_moment_); }

 private:
  NoiseModel() = default;

  Kind kind_ = Kind::kGaussian;
  Eigen::Index dim_ = 0;
  MatrixXd second_moment_;

  // gaussian / mixture: one factor F with covariance = F F^T per component
  std::vector<MixtureComponent> components_;
  std::vector<MatrixXd> factors_;
  std::vector<double> cumulative_weights_;

  std::vector<VectorXd> samples_;
};

/// PSD square root factor F with F F^T = S, via symmetric eigendecomposition.
MatrixXd psd_factor(const MatrixXd& S);

}  // namespace pareto_filter
