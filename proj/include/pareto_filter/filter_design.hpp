#pragma once

#include <vector>

#include "pareto_filter/matrix_equations.hpp"

namespace pareto_filter {

// Plant and noise statistics for the estimation problem
//   x(t+1) = A x(t) + w(t),   y(t) = C x(t) + v(t),
// with w ~ (0, Q), v ~ (0, R), x(0) ~ (0, Sigma0).
//
// A may be marginally stable (unit-circle eigenvalues, e.g. kinematic
// integrators): every gain-dependent quantity only needs rho(A - KCA) < 1.
// Operations that additionally require rho(A) < 1 (anything evaluated at the
// zero gain) throw InstabilityError for such systems. Strictly unstable A is
// rejected at construction.
class SystemModel {
 public:
  SystemModel(MatrixXd A, MatrixXd C, MatrixXd Q, MatrixXd R, MatrixXd Sigma0);

  const MatrixXd& A() const { return A_; }
  const MatrixXd& C() const { return C_; }
  const MatrixXd& Q() const { return Q_; }
  const MatrixXd& R() const { return R_; }
  const MatrixXd& Sigma0() const { return Sigma0_; }

  Eigen::Index state_dim() const { return A_.rows(); }
  Eigen::Index output_dim() const { return C_.rows(); }

  double spectral_radius_A() const { return rho_A_; }
  bool open_loop_stable() const { return rho_A_ < 1.0 - kStabilityMargin; }

  /// Copy with the measurement-noise covariance replaced.
  SystemModel with_noise_covariance(const MatrixXd& R) const;

 private:
  MatrixXd A_, C_, Q_, R_, Sigma0_;
  double rho_A_;
};

// An estimator gain together with its stability certificate. Construction
// rejects gains with rho(A - KCA) >= 1 - 1e-9.
struct FilterGain {
  MatrixXd K;
  double closed_loop_spectral_radius = 0.0;

  MatrixXd closed_loop_matrix(const SystemModel& sys) const {  // A_K = A - KCA
    return sys.A() - K * sys.C() * sys.A();
  }
  MatrixXd input_matrix(const SystemModel& sys) const {  // B_K = I - KC
    return MatrixXd::Identity(sys.state_dim(), sys.state_dim()) - K * sys.C();
  }
};

FilterGain make_filter_gain(const SystemModel& sys, MatrixXd K);

/// Zero gain; requires open-loop-stable A.
FilterGain zero_gain(const SystemModel& sys);

// One point on the accuracy/robustness frontier.
struct TradeoffPoint {
  double delta = 0.0;        // requested error bound
  double lambda = 0.0;       // multiplier achieving it
  FilterGain gain;
  double performance = 0.0;  // trace of the error covariance at gain
  double sensitivity = 0.0;  // trace of the sensitivity matrix at gain
  bool lambda_at_cap = false;
};

// Steady-state matrices and the closed-form derivatives evaluated at a gain.
struct GradientBundle {
  MatrixXd P;      // error covariance
  MatrixXd S;      // sensitivity matrix
  MatrixXd M;      // dual Lyapunov solution, M = A_K^T M A_K + I
  MatrixXd dP_dR;  // m x m
  MatrixXd dP_dK;  // n x m
  MatrixXd dS_dK;  // n x m
};

/// Steady-state error covariance: P = A_K P A_K^T + B_K Q B_K^T + K R K^T.
MatrixXd error_covariance(const SystemModel& sys, const FilterGain& gain);

/// Trace of the steady-state error covariance.
double performance(const SystemModel& sys, const FilterGain& gain);

/// Solution of S = A_K S A_K^T + K K^T.
MatrixXd sensitivity_matrix(const SystemModel& sys, const FilterGain& gain);

/// Trace of the sensitivity matrix: the derivative of performance along
/// identity-direction perturbations of R.
double sensitivity(const SystemModel& sys, const FilterGain& gain);

GradientBundle gradient_bundle(const SystemModel& sys, const FilterGain& gain);

/// Steady-state Kalman gain from the prediction Riccati equation; no
/// stability requirement on A beyond detectability of (A, C).
FilterGain steady_state_kalman_gain(const MatrixXd& A, const MatrixXd& C,
                                    const MatrixXd& Q, const MatrixXd& R);

/// Kalman gain for the model: the minimizer of performance(.).
FilterGain kalman_gain(const SystemModel& sys);

// Minimizer of sensitivity + lambda * performance. lambda = 0 gives the zero
// gain (requires stable A); lambda -> infinity approaches the Kalman gain.
FilterGain optimal_gain(const SystemModel& sys, double lambda);

// Multiplier values above this are treated as the Kalman endpoint of the
// frontier, where the exact multiplier diverges.
inline constexpr double kLambdaCap = 1e9;

// Finds lambda such that performance(optimal_gain(lambda)) = delta by
// bisection (monotonicity of the map), growing the bracket by doubling.
// delta outside [performance(Kalman), performance(zero gain)] raises
// InfeasibleTargetError; for marginally stable A the upper endpoint is
// unbounded and only the lower check applies.
TradeoffPoint solve_lambda_for_delta(const SystemModel& sys, double delta,
                                     double tolerance = 1e-8);

// Frontier over an increasing grid of error bounds. Points are computed
// independently (parallel across grid entries) and returned in grid order.
std::vector<TradeoffPoint> tradeoff_curve(const SystemModel& sys,
                                          const std::vector<double>& delta_grid);

/// Gain minimizing worst-case performance under trace-bounded R
/// perturbations of size gamma: identical to optimal_gain(1/gamma).
FilterGain robust_gain(const SystemModel& sys, double gamma);

/// performance + gamma * sensitivity.
double worst_case_performance(const SystemModel& sys, const FilterGain& gain,
                              double gamma);

}  // namespace pareto_filter
