#include "pareto_filter/filter_design.hpp"

#include <cmath>
#include <string>

#include "pareto_filter/parallel.hpp"

namespace pareto_filter {

SystemModel::SystemModel(MatrixXd A, MatrixXd C, MatrixXd Q, MatrixXd R, MatrixXd Sigma0)
    : A_(std::move(A)), C_(std::move(C)), Q_(std::move(Q)), R_(std::move(R)),
      Sigma0_(std::move(Sigma0)) {
  const Eigen::Index n = A_.rows(), m = C_.rows();
  if (A_.cols() != n) throw DimensionError("SystemModel: A must be square");
  if (C_.cols() != n) throw DimensionError("SystemModel: C must be m x n");
  if (Q_.rows() != n || Q_.cols() != n) throw DimensionError("SystemModel: Q must be n x n");
  if (R_.rows() != m || R_.cols() != m) throw DimensionError("SystemModel: R must be m x m");
  if (Sigma0_.rows() != n || Sigma0_.cols() != n)
    throw DimensionError("SystemModel: Sigma0 must be n x n");
  if (!A_.allFinite() || !C_.allFinite() || !Q_.allFinite() || !R_.allFinite() ||
      !Sigma0_.allFinite())
    throw ValidationError("SystemModel: non-finite entries");
  if (!is_positive_semidefinite(Q_)) throw ValidationError("SystemModel: Q must be PSD");
  if (!is_symmetric(R_) || !is_positive_definite(R_))
    throw ValidationError("SystemModel: R must be symmetric positive definite");
  if (!is_positive_semidefinite(Sigma0_))
    throw ValidationError("SystemModel: Sigma0 must be PSD");
  rho_A_ = spectral_radius(A_);
  if (rho_A_ > 1.0 + kStabilityMargin)
    throw InstabilityError("SystemModel: A is unstable (spectral radius " +
                           std::to_string(rho_A_) + ")");
}

SystemModel SystemModel::with_noise_covariance(const MatrixXd& R) const {
  return SystemModel(A_, C_, Q_, R, Sigma0_);
}

FilterGain make_filter_gain(const SystemModel& sys, MatrixXd K) {
  if (K.rows() != sys.state_dim() || K.cols() != sys.output_dim())
    throw DimensionError("FilterGain: K must be n x m");
  if (!K.allFinite()) throw ValidationError("FilterGain: non-finite entries");
  FilterGain gain{std::move(K), 0.0};
  gain.closed_loop_spectral_radius = spectral_radius(gain.closed_loop_matrix(sys));
  if (gain.closed_loop_spectral_radius >= 1.0 - kStabilityMargin)
    throw InstabilityError("FilterGain: rho(A - KCA) = " +
                           std::to_string(gain.closed_loop_spectral_radius) +
                           " is not < 1");
  return gain;
}

FilterGain zero_gain(const SystemModel& sys) {
  if (!sys.open_loop_stable())
    throw InstabilityError("zero_gain: A is not strictly stable");
  return make_filter_gain(sys, MatrixXd::Zero(sys.state_dim(), sys.output_dim()));
}

MatrixXd error_covariance(const SystemModel& sys, const FilterGain& gain) {
  const MatrixXd Ak = gain.closed_loop_matrix(sys);
  const MatrixXd Bk = gain.input_matrix(sys);
  const MatrixXd rhs =
      symmetrize(Bk * sys.Q() * Bk.transpose() + gain.K * sys.R() * gain.K.transpose());
  return solve_discrete_lyapunov(Ak, rhs);
}

double performance(const SystemModel& sys, const FilterGain& gain) {
  return error_covariance(sys, gain).trace();
}

MatrixXd sensitivity_matrix(const SystemModel& sys, const FilterGain& gain) {
  const MatrixXd Ak = gain.closed_loop_matrix(sys);
  return solve_discrete_lyapunov(Ak, symmetrize(gain.K * gain.K.transpose()));
}

double sensitivity(const SystemModel& sys, const FilterGain& gain) {
  return sensitivity_matrix(sys, gain).trace();
}

GradientBundle gradient_bundle(const SystemModel& sys, const FilterGain& gain) {
  const MatrixXd Ak = gain.closed_loop_matrix(sys);
  const MatrixXd Bk = gain.input_matrix(sys);
  const MatrixXd& K = gain.K;

  GradientBundle g;
  g.P = error_covariance(sys, gain);
  g.S = sensitivity_matrix(sys, gain);
  g.M = solve_dual_lyapunov(Ak, MatrixXd::Identity(sys.state_dim(), sys.state_dim()));

  const MatrixXd AtCt = sys.A().transpose() * sys.C().transpose();
  g.dP_dR = symmetrize(K.transpose() * g.M * K);
  g.dS_dK = 2.0 * g.M * (K - Ak * g.S * AtCt);
  g.dP_dK = 2.0 * g.M * (K * sys.R() - Ak * g.P * AtCt - Bk * sys.Q() * sys.C().transpose());
  return g;
}

FilterGain steady_state_kalman_gain(const MatrixXd& A, const MatrixXd& C,
                                    const MatrixXd& Q, const MatrixXd& R) {
  const MatrixXd Sigma = solve_prediction_riccati(A, C, Q, R);
  const MatrixXd G = symmetrize(C * Sigma * C.transpose() + R);
  FilterGain gain;
  gain.K = G.llt().solve(C * Sigma).transpose();
  gain.closed_loop_spectral_radius = spectral_radius(A - gain.K * C * A);
  if (gain.closed_loop_spectral_radius >= 1.0 - kStabilityMargin)
    throw ConvergenceError("steady_state_kalman_gain: closed loop not stable");
  return gain;
}

FilterGain kalman_gain(const SystemModel& sys) {
  return steady_state_kalman_gain(sys.A(), sys.C(), sys.Q(), sys.R());
}

FilterGain optimal_gain(const SystemModel& sys, double lambda) {
  if (lambda < 0.0) throw ValidationError("optimal_gain: lambda must be >= 0");
  if (lambda == 0.0) return zero_gain(sys);
  const MatrixXd X = solve_filter_riccati(sys.A(), sys.C(), sys.Q(), sys.R(), lambda);
  const MatrixXd G = symmetrize(
      sys.C() * X * sys.C().transpose() +
      MatrixXd::Identity(sys.output_dim(), sys.output_dim()) + lambda * sys.R());
  return make_filter_gain(sys, G.llt().solve(sys.C() * X).transpose());
}

namespace {

struct FrontierPoint {
  FilterGain gain;
  double perf;
  double sens;
};

FrontierPoint evaluate_lambda(const SystemModel& sys, double lambda) {
  FrontierPoint p;
  p.gain = optimal_gain(sys, lambda);
  p.perf = performance(sys, p.gain);
  p.sens = sensitivity(sys, p.gain);
  return p;
}

}  // namespace

TradeoffPoint solve_lambda_for_delta(const SystemModel& sys, double delta,
                                     double tolerance) {
  if (!(tolerance > 0.0)) throw ValidationError("solve_lambda_for_delta: tolerance must be > 0");
  const double tol = tolerance * std::max(1.0, std::abs(delta));

  const FilterGain kf = kalman_gain(sys);
  const double perf_min = performance(sys, kf);
  if (delta < perf_min - tol)
    throw InfeasibleTargetError("solve_lambda_for_delta: delta " + std::to_string(delta) +
                                " below the Kalman performance " + std::to_string(perf_min));

  if (sys.open_loop_stable()) {
    const FilterGain zero = zero_gain(sys);
    const double perf_max = performance(sys, zero);
    if (delta > perf_max + tol)
      throw InfeasibleTargetError("solve_lambda_for_delta: delta " + std::to_string(delta) +
                                  " above the zero-gain performance " +
                                  std::to_string(perf_max));
    if (std::abs(delta - perf_max) <= tol)
      return TradeoffPoint{delta, 0.0, zero, perf_max, 0.0, false};
  }

  // Bracket [lo, hi] with perf(lo) >= delta >= perf(hi); perf is strictly
  // decreasing in lambda. lo = 0 stands for the zero-gain endpoint.
  double lo = 0.0;
  double hi = 1.0;
  FrontierPoint at_hi = evaluate_lambda(sys, hi);
  while (at_hi.perf >= delta) {
    lo = hi;
    hi *= 2.0;
    if (hi >= kLambdaCap) {
      FrontierPoint capped = evaluate_lambda(sys, kLambdaCap);
      return TradeoffPoint{delta, kLambdaCap, capped.gain, capped.perf, capped.sens, true};
    }
    at_hi = evaluate_lambda(sys, hi);
  }

  for (int it = 0; it < 200; ++it) {
    const double mid = lo > 0.0 ? std::sqrt(lo * hi) : 0.5 * hi;
    FrontierPoint at_mid = evaluate_lambda(sys, mid);
    if (std::abs(at_mid.perf - delta) <= tol)
      return TradeoffPoint{delta, mid, at_mid.gain, at_mid.perf, at_mid.sens, false};
    if (at_mid.perf > delta)
      lo = mid;
    else
      hi = mid;
  }
  throw ConvergenceError("solve_lambda_for_delta: bisection failed to reach |P - delta| <= " +
                         std::to_string(tol));
}

std::vector<TradeoffPoint> tradeoff_curve(const SystemModel& sys,
                                          const std::vector<double>& delta_grid) {
  if (delta_grid.empty()) throw ValidationError("tradeoff_curve: empty delta grid");
  for (std::size_t i = 1; i < delta_grid.size(); ++i)
    if (!(delta_grid[i] > delta_grid[i - 1]))
      throw ValidationError("tradeoff_curve: delta grid must be strictly increasing");

  std::vector<TradeoffPoint> points(delta_grid.size());
  parallel_for_index(delta_grid.size(), [&](std::size_t i) {
    points[i] = solve_lambda_for_delta(sys, delta_grid[i]);
  });
  return points;
}

FilterGain robust_gain(const SystemModel& sys, double gamma) {
  if (!(gamma > 0.0)) throw ValidationError("robust_gain: gamma must be > 0");
  return optimal_gain(sys, 1.0 / gamma);
}

double worst_case_performance(const SystemModel& sys, const FilterGain& gain,
                              double gamma) {
  if (gamma < 0.0) throw ValidationError("worst_case_performance: gamma must be >= 0");
  return performance(sys, gain) + gamma * sensitivity(sys, gain);
}

}  // namespace pareto_filter
