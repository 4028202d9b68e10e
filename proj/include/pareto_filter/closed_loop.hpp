#pragma once

#include <cstdint>
#include <vector>

#include "pareto_filter/filter_design.hpp"
#include "pareto_filter/noise_model.hpp"

namespace pareto_filter {

// Plant with control input:
//   x(t+1) = A x(t) + B u(t) + w(t),   y(t) = C x(t) + v(t).
// (A, B) must be stabilizable and (A, C) detectable; both are certified when
// the LQR / Kalman gains are synthesized rather than at construction.
struct PlantWithInput {
  MatrixXd A, B, C, Q, R, Sigma0;
  double Ts = 1.0;

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index input_dim() const { return B.cols(); }
  Eigen::Index output_dim() const { return C.rows(); }

  void validate() const;

  /// Estimation-side view of the plant (input enters known, so the error
  /// statistics match the input-free model).
  SystemModel estimation_model() const { return SystemModel(A, C, Q, R, Sigma0); }
};

/// Planar kinematic vehicle: per-axis position/velocity integrator pair with
/// position-only measurements, Q = 0.1 I4 and R = 0.1 I2.
PlantWithInput vehicle_preset(double Ts);

struct ReferencePoint {
  VectorXd x_d;
  VectorXd u_d;
};

// Output-feedback tracking configuration:
//   x_c(t+1) = (I - KC)(A - BL) x_c(t) + K (y(t+1) - C x_d(t+1)),
//   u(t)     = -L x_c(t) + u_d(t).
// An empty reference means regulation about the origin.
struct ClosedLoopConfig {
  PlantWithInput plant;
  MatrixXd K;   // estimator gain, n x m
  MatrixXd L;   // controller gain, p x n
  MatrixXd Wx;  // state cost weight, n x n, > 0
  MatrixXd Wu;  // input cost weight, p x p, > 0
  std::vector<ReferencePoint> reference;

  void validate() const;
};

// Regulation-form joint dynamics of z = [x; x_c]:
//   z(t+1) = A z(t) + Bw w(t) + Bv v(t+1),  cost weight W = blkdiag(Wx, L^T Wu L).
struct AugmentedClosedLoop {
  MatrixXd A;   // [[A, -BL], [KCA, A - BL - KCA]]
  MatrixXd Bw;  // [[I], [KC]]
  MatrixXd Bv;  // [[0], [K]]
  MatrixXd W;
  double spectral_radius = 0.0;
};

/// Builds the joint closed-loop matrices; throws InstabilityError unless
/// rho(A - KCA) and rho(A - BL) are both < 1.
AugmentedClosedLoop augmented_closed_loop(const ClosedLoopConfig& cfg);

/// Steady-state quadratic cost J = Trace(W Sz) with
/// Sz = A Sz A^T + Bw Q Bw^T + Bv R Bv^T. Requires zero reference.
double closed_loop_cost(const ClosedLoopConfig& cfg);

/// Trace of dJ/dR: Trace(Bv^T M Bv) with M = A^T M A + W.
double cost_sensitivity(const ClosedLoopConfig& cfg);

struct TrackingResult {
  std::vector<VectorXd> states;
  std::vector<VectorXd> controller_states;
  double rmse = 0.0;  // root mean square position deviation from the reference
};

// Simulates the tracking loop for `horizon` steps. The reference must cover
// t = 0..horizon. x(0) ~ N(x_d(0), Sigma0), x_c(0) = 0. Step order: emit
// u(t), advance the plant, measure y(t+1), update the controller state.
TrackingResult tracking_simulate(const ClosedLoopConfig& cfg, const NoiseModel& w_model,
                                 const NoiseModel& v_model, int horizon,
                                 std::uint64_t seed);

struct TimedWaypoint {
  int step = 0;         // discrete time index, strictly increasing, first = 0
  VectorXd position;    // one entry per controlled axis
};

// Piecewise-constant-velocity reference through the waypoints, with u_d
// recovered by exact inversion of the integrator update so that
// x_d(t+1) = A x_d(t) + B u_d(t) holds exactly. Requires the kinematic
// integrator plant layout of vehicle_preset.
std::vector<ReferencePoint> reference_from_waypoints(
    const PlantWithInput& plant, const std::vector<TimedWaypoint>& waypoints);

/// Closed rounded-rectangle course traversed at constant speed; waypoints
/// spaced every `steps_per_waypoint` samples.
std::vector<TimedWaypoint> rounded_rectangle_course(double width, double height,
                                                    double corner_radius, double speed,
                                                    double Ts,
                                                    int steps_per_waypoint = 5);

/// Concatenates `laps` traversals of a closed course (last waypoint at the
/// starting position).
std::vector<TimedWaypoint> repeat_course(const std::vector<TimedWaypoint>& course,
                                         int laps);

struct RmseSweepRecord {
  double scale = 0.0;   // actual R = scale * nominal R
  double rmse_a = 0.0;  // seed-averaged RMSE of configuration a
  double rmse_b = 0.0;
  double stderr_a = 0.0;
  double stderr_b = 0.0;
};

// Tracks both configurations under measurement noise scale * R for each grid
// scale, averaging RMSE over the seeds. Process noise stays Gaussian(Q).
std::vector<RmseSweepRecord> rmse_sweep(const ClosedLoopConfig& cfg_a,
                                        const ClosedLoopConfig& cfg_b,
                                        const std::vector<double>& scale_grid,
                                        int horizon,
                                        const std::vector<std::uint64_t>& seeds);

enum class TradeoffMode { kOptimizeBoth, kFixControllerLqr, kFixEstimatorKalman };

const char* tradeoff_mode_name(TradeoffMode mode);
TradeoffMode tradeoff_mode_from_name(const std::string& name);

struct ClosedLoopTradeoffPoint {
  double delta = 0.0;
  TradeoffMode mode = TradeoffMode::kOptimizeBoth;
  MatrixXd K, L;
  double cost = 0.0;
  double sensitivity = 0.0;
  double mu = 0.0;        // scalarization weight achieving cost = delta
  bool certified = true;  // cost matched delta and the multi-start polish
                          // found no better minimum at that weight
};

struct ClosedLoopTradeoffOptions {
  int multistarts = 6;             // random restarts at anchor solves (>= 5)
  std::uint64_t seed = 2024;
  int max_iterations = 300;        // inner descent iteration cap
  double gradient_tol = 1e-8;      // relative stationarity target
  double cost_match_rel_tol = 1e-4;
  double mu_min = 1e-8;
  double mu_max = 1e10;
};

// Traces min S_J s.t. J <= delta over the grid by scalarizing (S_J + mu J),
// minimizing with finite-difference gradient descent (backtracking line
// search, destabilizing iterates rejected, multi-start), and bisecting mu
// until the cost constraint is active. Points where bisection cannot match
// delta are returned flagged non-certified.
std::vector<ClosedLoopTradeoffPoint> closed_loop_tradeoff(
    const PlantWithInput& plant, const MatrixXd& Wx, const MatrixXd& Wu,
    const std::vector<double>& delta_grid, TradeoffMode mode,
    const ClosedLoopTradeoffOptions& options = {});

struct LambdaFamilyPoint {
  double lambda = 0.0;
  MatrixXd K;
  double cost = 0.0;
  double sensitivity = 0.0;
};

// With the controller fixed to the LQR gain, selects the accuracy/robustness
// frontier estimator (multiplier-parameterized family) whose closed-loop cost
// equals delta, by bisection on the multiplier.
LambdaFamilyPoint lambda_family_point_at_cost(const PlantWithInput& plant,
                                              const MatrixXd& Wx, const MatrixXd& Wu,
                                              double delta);

}  // namespace pareto_filter
