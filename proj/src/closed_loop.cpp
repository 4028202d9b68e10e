#include "pareto_filter/closed_loop.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pareto_filter/parallel.hpp"
#include "pareto_filter/rng.hpp"

namespace pareto_filter {

void PlantWithInput::validate() const {
  const Eigen::Index n = A.rows(), p = B.cols(), m = C.rows();
  if (A.cols() != n) throw DimensionError("PlantWithInput: A must be square");
  if (B.rows() != n) throw DimensionError("PlantWithInput: B must be n x p");
  if (C.cols() != n) throw DimensionError("PlantWithInput: C must be m x n");
  if (Q.rows() != n || Q.cols() != n) throw DimensionError("PlantWithInput: Q must be n x n");
  if (R.rows() != m || R.cols() != m) throw DimensionError("PlantWithInput: R must be m x m");
  if (Sigma0.rows() != n || Sigma0.cols() != n)
    throw DimensionError("PlantWithInput: Sigma0 must be n x n");
  if (!A.allFinite() || !B.allFinite() || !C.allFinite() || !Q.allFinite() ||
      !R.allFinite() || !Sigma0.allFinite())
    throw ValidationError("PlantWithInput: non-finite entries");
  if (!is_positive_semidefinite(Q)) throw ValidationError("PlantWithInput: Q must be PSD");
  if (!is_symmetric(R) || !is_positive_definite(R))
    throw ValidationError("PlantWithInput: R must be symmetric positive definite");
  if (!is_positive_semidefinite(Sigma0))
    throw ValidationError("PlantWithInput: Sigma0 must be PSD");
  if (!(Ts > 0.0)) throw ValidationError("PlantWithInput: Ts must be > 0");
  (void)p;
}

PlantWithInput vehicle_preset(double Ts) {
  if (!(Ts > 0.0)) throw ValidationError("vehicle_preset: Ts must be > 0");
  PlantWithInput plant;
  plant.Ts = Ts;
  plant.A = MatrixXd::Identity(4, 4);
  plant.A(0, 1) = Ts;
  plant.A(2, 3) = Ts;
  plant.B = MatrixXd::Zero(4, 2);
  plant.B(1, 0) = Ts;
  plant.B(3, 1) = Ts;
  plant.C = MatrixXd::Zero(2, 4);
  plant.C(0, 0) = 1.0;
  plant.C(1, 2) = 1.0;
  plant.Q = 0.1 * MatrixXd::Identity(4, 4);
  plant.R = 0.1 * MatrixXd::Identity(2, 2);
  plant.Sigma0 = MatrixXd::Zero(4, 4);
  return plant;
}

void ClosedLoopConfig::validate() const {
  plant.validate();
  const Eigen::Index n = plant.state_dim(), p = plant.input_dim(), m = plant.output_dim();
  if (K.rows() != n || K.cols() != m) throw DimensionError("ClosedLoopConfig: K must be n x m");
  if (L.rows() != p || L.cols() != n) throw DimensionError("ClosedLoopConfig: L must be p x n");
  if (Wx.rows() != n || Wx.cols() != n) throw DimensionError("ClosedLoopConfig: Wx must be n x n");
  if (Wu.rows() != p || Wu.cols() != p) throw DimensionError("ClosedLoopConfig: Wu must be p x p");
  if (!K.allFinite() || !L.allFinite())
    throw ValidationError("ClosedLoopConfig: non-finite gain entries");
  if (!is_positive_definite(Wx)) throw ValidationError("ClosedLoopConfig: Wx must be > 0");
  if (!is_positive_definite(Wu)) throw ValidationError("ClosedLoopConfig: Wu must be > 0");
  for (const auto& r : reference)
    if (r.x_d.size() != n || r.u_d.size() != p)
      throw DimensionError("ClosedLoopConfig: reference dimension mismatch");
}

namespace {

struct JointMatrices {
  MatrixXd A, Bw, Bv, W;
};

JointMatrices joint_matrices(const ClosedLoopConfig& cfg) {
  const Eigen::Index n = cfg.plant.state_dim(), m = cfg.plant.output_dim();
  const MatrixXd KCA = cfg.K * cfg.plant.C * cfg.plant.A;
  const MatrixXd BL = cfg.plant.B * cfg.L;

  JointMatrices j;
  j.A = MatrixXd::Zero(2 * n, 2 * n);
  j.A.topLeftCorner(n, n) = cfg.plant.A;
  j.A.topRightCorner(n, n) = -BL;
  j.A.bottomLeftCorner(n, n) = KCA;
  j.A.bottomRightCorner(n, n) = cfg.plant.A - BL - KCA;

  j.Bw = MatrixXd::Zero(2 * n, n);
  j.Bw.topRows(n) = MatrixXd::Identity(n, n);
  j.Bw.bottomRows(n) = cfg.K * cfg.plant.C;

  j.Bv = MatrixXd::Zero(2 * n, m);
  j.Bv.bottomRows(n) = cfg.K;

  j.W = MatrixXd::Zero(2 * n, 2 * n);
  j.W.topLeftCorner(n, n) = symmetrize(cfg.Wx);
  j.W.bottomRightCorner(n, n) = symmetrize(cfg.L.transpose() * cfg.Wu * cfg.L);
  return j;
}

// Shared fast path: one LU factorization serves the covariance (primal) and
// the cost-dual Lyapunov equation. Returns false when the loop is unstable.
bool joint_cost_and_sensitivity(const JointMatrices& j, const MatrixXd& Q,
                                const MatrixXd& R, double* cost, double* sens) {
  const Eigen::Index n2 = j.A.rows();
  if (j.A.eigenvalues().cwiseAbs().maxCoeff() >= 1.0 - kStabilityMargin) return false;

  MatrixXd system = MatrixXd::Identity(n2 * n2, n2 * n2) - kronecker(j.A, j.A);
  Eigen::PartialPivLU<MatrixXd> lu(std::move(system));

  const MatrixXd rhs = symmetrize(j.Bw * Q * j.Bw.transpose() + j.Bv * R * j.Bv.transpose());
  const VectorXd sz = lu.solve(Eigen::Map<const VectorXd>(rhs.data(), n2 * n2));
  const MatrixXd Sz = Eigen::Map<const MatrixXd>(sz.data(), n2, n2);
  *cost = (j.W * Sz).trace();

  const VectorXd m = lu.transpose().solve(Eigen::Map<const VectorXd>(j.W.data(), n2 * n2));
  const MatrixXd M = Eigen::Map<const MatrixXd>(m.data(), n2, n2);
  *sens = (j.Bv.transpose() * M * j.Bv).trace();
  return true;
}

void require_zero_reference(const ClosedLoopConfig& cfg, const char* op) {
  if (!cfg.reference.empty())
    throw ValidationError(std::string(op) + ": regulation form requires a zero reference");
}

}  // namespace

AugmentedClosedLoop augmented_closed_loop(const ClosedLoopConfig& cfg) {
  cfg.validate();
  JointMatrices j = joint_matrices(cfg);
  AugmentedClosedLoop out;
  out.spectral_radius = spectral_radius(j.A);
  if (out.spectral_radius >= 1.0 - kStabilityMargin)
    throw InstabilityError("augmented_closed_loop: rho = " +
                           std::to_string(out.spectral_radius) + " is not < 1");
  out.A = std::move(j.A);
  out.Bw = std::move(j.Bw);
  out.Bv = std::move(j.Bv);
  out.W = std::move(j.W);
  return out;
}

double closed_loop_cost(const ClosedLoopConfig& cfg) {
  require_zero_reference(cfg, "closed_loop_cost");
  const AugmentedClosedLoop loop = augmented_closed_loop(cfg);
  const MatrixXd rhs = symmetrize(loop.Bw * cfg.plant.Q * loop.Bw.transpose() +
                                  loop.Bv * cfg.plant.R * loop.Bv.transpose());
  const MatrixXd Sz = solve_discrete_lyapunov(loop.A, rhs);
  return (loop.W * Sz).trace();
}

double cost_sensitivity(const ClosedLoopConfig& cfg) {
  require_zero_reference(cfg, "cost_sensitivity");
  const AugmentedClosedLoop loop = augmented_closed_loop(cfg);
  const MatrixXd M = solve_dual_lyapunov(loop.A, loop.W);
  return (loop.Bv.transpose() * M * loop.Bv).trace();
}

namespace {

TrackingResult tracking_run(const ClosedLoopConfig& cfg, const NoiseModel& w_model,
                            const NoiseModel& v_model, int horizon, std::uint64_t seed,
                            bool store_trajectory) {
  cfg.validate();
  const Eigen::Index n = cfg.plant.state_dim(), p = cfg.plant.input_dim();
  if (w_model.dim() != n) throw ValidationError("tracking_simulate: w model dimension != n");
  if (v_model.dim() != cfg.plant.output_dim())
    throw ValidationError("tracking_simulate: v model dimension != m");
  if (horizon < 1) throw ValidationError("tracking_simulate: horizon must be >= 1");

  // Stability certificate for the loop matrices (regulation form).
  ClosedLoopConfig regulation = cfg;
  regulation.reference.clear();
  (void)augmented_closed_loop(regulation);

  std::vector<ReferencePoint> zero_reference;
  const std::vector<ReferencePoint>* reference = &cfg.reference;
  if (cfg.reference.empty()) {
    zero_reference.assign(horizon + 1, ReferencePoint{VectorXd::Zero(n), VectorXd::Zero(p)});
    reference = &zero_reference;
  }
  if (static_cast<int>(reference->size()) < horizon + 1)
    throw ValidationError("tracking_simulate: reference shorter than horizon + 1");

  SplitMix64 rng(seed);
  const MatrixXd sigma0_factor = psd_factor(cfg.plant.Sigma0);
  const MatrixXd controller_A =
      (MatrixXd::Identity(n, n) - cfg.K * cfg.plant.C) * (cfg.plant.A - cfg.plant.B * cfg.L);

  VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.next_gaussian();
  VectorXd x = (*reference)[0].x_d + sigma0_factor * z;
  VectorXd xc = VectorXd::Zero(n);

  TrackingResult result;
  if (store_trajectory) {
    result.states.reserve(horizon + 1);
    result.controller_states.reserve(horizon + 1);
  }

  double sum_sq = 0.0;
  for (int t = 0; t <= horizon; ++t) {
    if (store_trajectory) {
      result.states.push_back(x);
      result.controller_states.push_back(xc);
    }
    sum_sq += (cfg.plant.C * (x - (*reference)[t].x_d)).squaredNorm();
    if (t == horizon) break;

    const VectorXd u = -cfg.L * xc + (*reference)[t].u_d;
    x = cfg.plant.A * x + cfg.plant.B * u + w_model.sample(rng);
    const VectorXd y = cfg.plant.C * x + v_model.sample(rng);
    xc = controller_A * xc + cfg.K * (y - cfg.plant.C * (*reference)[t + 1].x_d);
  }
  result.rmse = std::sqrt(sum_sq / static_cast<double>(horizon + 1));
  return result;
}

}  // namespace

TrackingResult tracking_simulate(const ClosedLoopConfig& cfg, const NoiseModel& w_model,
                                 const NoiseModel& v_model, int horizon,
                                 std::uint64_t seed) {
  return tracking_run(cfg, w_model, v_model, horizon, seed, true);
}

std::vector<ReferencePoint> reference_from_waypoints(
    const PlantWithInput& plant, const std::vector<TimedWaypoint>& waypoints) {
  plant.validate();
  const Eigen::Index p = plant.input_dim(), n = plant.state_dim();
  if (n != 2 * p)
    throw ValidationError("reference_from_waypoints: plant must pair one velocity per axis");
  // Verify the kinematic integrator layout used for the exact inversion.
  MatrixXd A_expected = MatrixXd::Identity(n, n);
  MatrixXd B_expected = MatrixXd::Zero(n, p);
  for (Eigen::Index axis = 0; axis < p; ++axis) {
    A_expected(2 * axis, 2 * axis + 1) = plant.Ts;
    B_expected(2 * axis + 1, axis) = plant.Ts;
  }
  if ((plant.A - A_expected).cwiseAbs().maxCoeff() > 1e-12 ||
      (plant.B - B_expected).cwiseAbs().maxCoeff() > 1e-12)
    throw ValidationError("reference_from_waypoints: plant is not a kinematic integrator");

  if (waypoints.size() < 2)
    throw ValidationError("reference_from_waypoints: need at least two waypoints");
  if (waypoints.front().step != 0)
    throw ValidationError("reference_from_waypoints: first waypoint must be at step 0");
  for (std::size_t i = 0; i < waypoints.size(); ++i) {
    if (waypoints[i].position.size() != p)
      throw DimensionError("reference_from_waypoints: waypoint dimension mismatch");
    if (i > 0 && waypoints[i].step <= waypoints[i - 1].step)
      throw ValidationError("reference_from_waypoints: waypoint steps must strictly increase");
  }

  const int total_steps = waypoints.back().step;
  // Per-segment constant velocity hitting each waypoint exactly.
  std::vector<VectorXd> velocity(total_steps + 1, VectorXd::Zero(p));
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
    const int steps = waypoints[i + 1].step - waypoints[i].step;
    const VectorXd v =
        (waypoints[i + 1].position - waypoints[i].position) / (steps * plant.Ts);
    for (int t = waypoints[i].step; t < waypoints[i + 1].step; ++t) velocity[t] = v;
  }
  velocity[total_steps] = velocity[total_steps == 0 ? 0 : total_steps - 1];

  std::vector<ReferencePoint> reference(total_steps + 1);
  VectorXd position = waypoints.front().position;
  for (int t = 0; t <= total_steps; ++t) {
    VectorXd x_d(n), u_d(p);
    const VectorXd next_velocity = t < total_steps ? velocity[t + 1] : velocity[t];
    for (Eigen::Index axis = 0; axis < p; ++axis) {
      x_d(2 * axis) = position(axis);
      x_d(2 * axis + 1) = velocity[t](axis);
      u_d(axis) = (next_velocity(axis) - velocity[t](axis)) / plant.Ts;
    }
    reference[t] = ReferencePoint{x_d, u_d};
    if (t < total_steps) position += plant.Ts * velocity[t];
  }
  return reference;
}

std::vector<TimedWaypoint> rounded_rectangle_course(double width, double height,
                                                    double corner_radius, double speed,
                                                    double Ts, int steps_per_waypoint) {
  if (!(width > 2 * corner_radius) || !(height > 2 * corner_radius) || corner_radius < 0.0)
    throw ValidationError("rounded_rectangle_course: corners do not fit the rectangle");
  if (!(speed > 0.0) || !(Ts > 0.0) || steps_per_waypoint < 1)
    throw ValidationError("rounded_rectangle_course: speed, Ts, spacing must be positive");

  const double pi = 3.14159265358979323846;
  const double sw = width - 2 * corner_radius, sh = height - 2 * corner_radius;
  const double arc = 0.5 * pi * corner_radius;
  const double perimeter = 2 * sw + 2 * sh + 4 * arc;

  // Perimeter position, counterclockwise from the bottom-left straight start.
  auto point_at = [&](double s) -> Eigen::Vector2d {
    s = std::fmod(s, perimeter);
    if (s < 0) s += perimeter;
    const double r = corner_radius;
    if (s < sw) return {r + s, 0.0};
    s -= sw;
    if (s < arc) {
      const double a = s / r;
      return {width - r + r * std::sin(a), r - r * std::cos(a)};
    }
    s -= arc;
    if (s < sh) return {width, r + s};
    s -= sh;
    if (s < arc) {
      const double a = s / r;
      return {width - r + r * std::cos(a), height - r + r * std::sin(a)};
    }
    s -= arc;
    if (s < sw) return {width - r - s, height};
    s -= sw;
    if (s < arc) {
      const double a = s / r;
      return {r - r * std::sin(a), height - r + r * std::cos(a)};
    }
    s -= arc;
    if (s < sh) return {0.0, height - r - s};
    s -= sh;
    const double a = s / r;
    return {r - r * std::cos(a), r - r * std::sin(a)};
  };

  const double step_len = speed * Ts;
  int total_steps = std::max(steps_per_waypoint,
                             static_cast<int>(std::llround(perimeter / step_len)));
  total_steps -= total_steps % steps_per_waypoint;
  if (total_steps == 0) total_steps = steps_per_waypoint;
  const double actual_step = perimeter / total_steps;

  std::vector<TimedWaypoint> course;
  for (int t = 0; t <= total_steps; t += steps_per_waypoint) {
    TimedWaypoint wp;
    wp.step = t;
    const Eigen::Vector2d pt = t == total_steps ? point_at(0.0) : point_at(t * actual_step);
    wp.position = pt;
    course.push_back(std::move(wp));
  }
  return course;
}

std::vector<TimedWaypoint> repeat_course(const std::vector<TimedWaypoint>& course,
                                         int laps) {
  if (course.size() < 2) throw ValidationError("repeat_course: need a closed course");
  if ((course.front().position - course.back().position).norm() > 1e-9)
    throw ValidationError("repeat_course: course must end at its starting position");
  if (laps < 1) throw ValidationError("repeat_course: laps must be >= 1");

  const int lap_steps = course.back().step;
  std::vector<TimedWaypoint> tiled;
  for (int lap = 0; lap < laps; ++lap) {
    const std::size_t first = lap == 0 ? 0 : 1;  // skip duplicated boundary point
    for (std::size_t i = first; i < course.size(); ++i) {
      TimedWaypoint wp = course[i];
      wp.step += lap * lap_steps;
      tiled.push_back(std::move(wp));
    }
  }
  return tiled;
}

std::vector<RmseSweepRecord> rmse_sweep(const ClosedLoopConfig& cfg_a,
                                        const ClosedLoopConfig& cfg_b,
                                        const std::vector<double>& scale_grid,
                                        int horizon,
                                        const std::vector<std::uint64_t>& seeds) {
  if (scale_grid.empty()) throw ValidationError("rmse_sweep: empty scale grid");
  for (double s : scale_grid)
    if (!(s > 0.0)) throw ValidationError("rmse_sweep: scales must be positive");
  if (seeds.empty()) throw ValidationError("rmse_sweep: needs >= 1 seed");

  const NoiseModel w_model = NoiseModel::gaussian(cfg_a.plant.Q);
  const MatrixXd R_nominal = cfg_a.plant.R;

  struct Cell {
    double rmse_a = 0.0, rmse_b = 0.0;
  };
  std::vector<Cell> cells(scale_grid.size() * seeds.size());
  parallel_for_index(cells.size(), [&](std::size_t idx) {
    const std::size_t si = idx / seeds.size();
    const std::size_t ki = idx % seeds.size();
    const NoiseModel v_model = NoiseModel::gaussian(scale_grid[si] * R_nominal);
    SplitMix64 seeder = SplitMix64::stream(seeds[ki], si);
    const std::uint64_t run_seed = seeder.next_u64();
    // Same seed for both filters: paired comparison on a common noise draw.
    cells[idx].rmse_a = tracking_run(cfg_a, w_model, v_model, horizon, run_seed, false).rmse;
    cells[idx].rmse_b = tracking_run(cfg_b, w_model, v_model, horizon, run_seed, false).rmse;
  });

  std::vector<RmseSweepRecord> records(scale_grid.size());
  const double count = static_cast<double>(seeds.size());
  for (std::size_t si = 0; si < scale_grid.size(); ++si) {
    RmseSweepRecord& rec = records[si];
    rec.scale = scale_grid[si];
    double sum_a = 0.0, sum_b = 0.0;
    for (std::size_t ki = 0; ki < seeds.size(); ++ki) {
      sum_a += cells[si * seeds.size() + ki].rmse_a;
      sum_b += cells[si * seeds.size() + ki].rmse_b;
    }
    rec.rmse_a = sum_a / count;
    rec.rmse_b = sum_b / count;
    double var_a = 0.0, var_b = 0.0;
    for (std::size_t ki = 0; ki < seeds.size(); ++ki) {
      var_a += std::pow(cells[si * seeds.size() + ki].rmse_a - rec.rmse_a, 2);
      var_b += std::pow(cells[si * seeds.size() + ki].rmse_b - rec.rmse_b, 2);
    }
    if (seeds.size() > 1) {
      rec.stderr_a = std::sqrt(var_a / (count - 1.0) / count);
      rec.stderr_b = std::sqrt(var_b / (count - 1.0) / count);
    }
  }
  return records;
}

const char* tradeoff_mode_name(TradeoffMode mode) {
  switch (mode) {
    case TradeoffMode::kOptimizeBoth: return "optimize-both";
    case TradeoffMode::kFixControllerLqr: return "fix-L-lqr";
    case TradeoffMode::kFixEstimatorKalman: return "fix-K-kalman";
  }
  throw Error("tradeoff_mode_name: unreachable");
}

TradeoffMode tradeoff_mode_from_name(const std::string& name) {
  if (name == "optimize-both") return TradeoffMode::kOptimizeBoth;
  if (name == "fix-L-lqr") return TradeoffMode::kFixControllerLqr;
  if (name == "fix-K-kalman") return TradeoffMode::kFixEstimatorKalman;
  throw ValidationError("unknown trade-off mode: " + name);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Scalarized problem S_J + mu * J over the free gain entries of one mode.
class ScalarizedProblem {
 public:
  ScalarizedProblem(const PlantWithInput& plant, const MatrixXd& Wx, const MatrixXd& Wu,
                    TradeoffMode mode, MatrixXd K_fixed, MatrixXd L_fixed)
      : plant_(&plant), Wx_(Wx), Wu_(Wu), mode_(mode),
        K_fixed_(std::move(K_fixed)), L_fixed_(std::move(L_fixed)) {}

  bool k_free() const { return mode_ != TradeoffMode::kFixEstimatorKalman; }
  bool l_free() const { return mode_ != TradeoffMode::kFixControllerLqr; }

  int dim() const {
    int d = 0;
    if (k_free()) d += static_cast<int>(K_fixed_.size());
    if (l_free()) d += static_cast<int>(L_fixed_.size());
    return d;
  }

  VectorXd pack(const MatrixXd& K, const MatrixXd& L) const {
    VectorXd theta(dim());
    int at = 0;
    if (k_free()) {
      theta.segment(at, K.size()) = Eigen::Map<const VectorXd>(K.data(), K.size());
      at += static_cast<int>(K.size());
    }
    if (l_free())
      theta.segment(at, L.size()) = Eigen::Map<const VectorXd>(L.data(), L.size());
    return theta;
  }

  void unpack(const VectorXd& theta, MatrixXd& K, MatrixXd& L) const {
    K = K_fixed_;
    L = L_fixed_;
    int at = 0;
    if (k_free()) {
      K = Eigen::Map<const MatrixXd>(theta.data(), K_fixed_.rows(), K_fixed_.cols());
      at += static_cast<int>(K_fixed_.size());
    }
    if (l_free())
      L = Eigen::Map<const MatrixXd>(theta.data() + at, L_fixed_.rows(), L_fixed_.cols());
  }

  struct Eval {
    double objective = kInf;
    double cost = kInf;
    double sensitivity = kInf;
  };

  Eval evaluate(const VectorXd& theta, double mu) const {
    MatrixXd K, L;
    unpack(theta, K, L);
    ClosedLoopConfig cfg{*plant_, std::move(K), std::move(L), Wx_, Wu_, {}};
    JointMatrices j = joint_matrices(cfg);
    Eval e;
    double cost = 0.0, sens = 0.0;
    if (!joint_cost_and_sensitivity(j, plant_->Q, plant_->R, &cost, &sens)) return e;
    e.cost = cost;
    e.sensitivity = sens;
    e.objective = sens + mu * cost;
    return e;
  }

 private:
  const PlantWithInput* plant_;
  MatrixXd Wx_, Wu_;
  TradeoffMode mode_;
  MatrixXd K_fixed_, L_fixed_;
};

struct InnerSolution {
  VectorXd theta;
  double objective = kInf;
  double cost = kInf;
  double sensitivity = kInf;
};

// Finite-difference gradient descent with backtracking; unstable iterates
// evaluate to +inf and are rejected by the line search. The central-difference
// probes also yield per-coordinate curvatures, which scale the step
// (diagonal quasi-Newton) so narrow cost valleys converge in few iterations.
InnerSolution descend(const ScalarizedProblem& problem, double mu, VectorXd theta,
                      const ClosedLoopTradeoffOptions& opts) {
  InnerSolution best;
  ScalarizedProblem::Eval current = problem.evaluate(theta, mu);
  if (!std::isfinite(current.objective)) return best;

  const int dim = static_cast<int>(theta.size());
  VectorXd gradient(dim), curvature(dim);
  int stall = 0;

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    double max_curvature = 0.0;
    for (int i = 0; i < dim; ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(theta(i)));
      VectorXd probe = theta;
      probe(i) = theta(i) + h;
      const double f_plus = problem.evaluate(probe, mu).objective;
      probe(i) = theta(i) - h;
      const double f_minus = problem.evaluate(probe, mu).objective;
      if (std::isfinite(f_plus) && std::isfinite(f_minus)) {
        gradient(i) = (f_plus - f_minus) / (2.0 * h);
        curvature(i) = (f_plus - 2.0 * current.objective + f_minus) / (h * h);
      } else if (std::isfinite(f_minus)) {
        gradient(i) = (current.objective - f_minus) / h;
        curvature(i) = 0.0;
      } else if (std::isfinite(f_plus)) {
        gradient(i) = (f_plus - current.objective) / h;
        curvature(i) = 0.0;
      } else {
        gradient(i) = 0.0;
        curvature(i) = 0.0;
      }
      max_curvature = std::max(max_curvature, curvature(i));
    }
    const double gnorm = gradient.norm();
    if (gnorm <= opts.gradient_tol * (1.0 + std::abs(current.objective))) break;

    const double curvature_floor = std::max(1e-6 * max_curvature, 1e-12);
    VectorXd direction(dim);
    for (int i = 0; i < dim; ++i)
      direction(i) = -gradient(i) / std::max(curvature(i), curvature_floor);
    double slope = gradient.dot(direction);
    if (!(slope < 0.0)) {  // curvature estimates unusable; fall back to steepest
      direction = -gradient / gnorm;
      slope = -gnorm;
    }

    double trial = 1.0;
    bool accepted = false;
    while (trial >= 1e-14) {
      const VectorXd candidate = theta + trial * direction;
      const ScalarizedProblem::Eval eval = problem.evaluate(candidate, mu);
      if (eval.objective <= current.objective + 1e-4 * trial * slope) {
        theta = candidate;
        const double improvement = current.objective - eval.objective;
        current = eval;
        accepted = true;
        stall = improvement <= 1e-12 * (1.0 + std::abs(current.objective)) ? stall + 1 : 0;
        break;
      }
      trial *= 0.5;
    }
    if (!accepted || stall >= 4) break;
  }

  best.theta = std::move(theta);
  best.objective = current.objective;
  best.cost = current.cost;
  best.sensitivity = current.sensitivity;
  return best;
}

// Multi-start wrapper; starts are descended in parallel, best kept.
InnerSolution solve_scalarized(const ScalarizedProblem& problem, double mu,
                               const std::vector<VectorXd>& starts,
                               const ClosedLoopTradeoffOptions& opts) {
  std::vector<InnerSolution> results(starts.size());
  parallel_for_index(starts.size(), [&](std::size_t i) {
    results[i] = descend(problem, mu, starts[i], opts);
  });
  InnerSolution best;
  for (auto& r : results)
    if (r.objective < best.objective) best = std::move(r);
  if (!std::isfinite(best.objective))
    throw ConvergenceError("closed_loop_tradeoff: no stabilizing start found");
  return best;
}

std::vector<VectorXd> random_starts(const ScalarizedProblem& problem,
                                    const VectorXd& base, int count,
                                    std::uint64_t seed, double mu) {
  std::vector<VectorXd> starts{base};
  SplitMix64 rng(seed);
  const double base_scale = std::max(1.0, base.cwiseAbs().maxCoeff());
  for (int s = 1; s < count; ++s) {
    double sigma = 0.05 * base_scale * (1 + s % 4);
    for (int attempt = 0; attempt < 60; ++attempt) {
      VectorXd candidate = base;
      for (Eigen::Index i = 0; i < candidate.size(); ++i)
        candidate(i) += sigma * rng.next_gaussian();
      if (std::isfinite(problem.evaluate(candidate, mu).objective)) {
        starts.push_back(std::move(candidate));
        break;
      }
      sigma *= 0.7;
    }
  }
  return starts;
}

}  // namespace

std::vector<ClosedLoopTradeoffPoint> closed_loop_tradeoff(
    const PlantWithInput& plant, const MatrixXd& Wx, const MatrixXd& Wu,
    const std::vector<double>& delta_grid, TradeoffMode mode,
    const ClosedLoopTradeoffOptions& options) {
  plant.validate();
  if (delta_grid.empty()) throw ValidationError("closed_loop_tradeoff: empty delta grid");
  for (std::size_t i = 1; i < delta_grid.size(); ++i)
    if (!(delta_grid[i] > delta_grid[i - 1]))
      throw ValidationError("closed_loop_tradeoff: delta grid must strictly increase");
  if (options.multistarts < 1)
    throw ValidationError("closed_loop_tradeoff: multistarts must be >= 1");

  const FilterGain kalman = steady_state_kalman_gain(plant.A, plant.C, plant.Q, plant.R);
  const LqrSolution lqr = solve_lqr_riccati(plant.A, plant.B, Wx, Wu);
  const ClosedLoopConfig baseline{plant, kalman.K, lqr.L, Wx, Wu, {}};
  const double cost_min = closed_loop_cost(baseline);

  for (double delta : delta_grid)
    if (delta < cost_min * (1.0 - 1e-9) - 1e-12)
      throw InfeasibleTargetError("closed_loop_tradeoff: delta " + std::to_string(delta) +
                                  " below the optimal cost " + std::to_string(cost_min));

  ScalarizedProblem problem(plant, Wx, Wu, mode, kalman.K, lqr.L);
  const VectorXd base_theta = problem.pack(kalman.K, lqr.L);

  // Descending-mu chain: each solution warm-starts the next, with periodic
  // multi-start refreshes. J*(mu) grows as mu falls.
  struct ChainEntry {
    double mu;
    InnerSolution sol;
  };
  std::vector<double> mu_grid;
  for (double mu = options.mu_max; mu >= options.mu_min * 0.999; mu /= std::sqrt(10.0))
    mu_grid.push_back(mu);

  std::vector<ChainEntry> chain;
  VectorXd warm = base_theta;
  for (std::size_t i = 0; i < mu_grid.size(); ++i) {
    const double mu = mu_grid[i];
    std::vector<VectorXd> starts;
    if (i == 0 || i % 12 == 0)
      starts = random_starts(problem, warm, options.multistarts, options.seed + i, mu);
    else
      starts = {warm};
    InnerSolution sol = solve_scalarized(problem, mu, starts, options);
    warm = sol.theta;
    chain.push_back(ChainEntry{mu, std::move(sol)});
  }

  const double unconstrained_cost = chain.back().sol.cost;

  std::vector<ClosedLoopTradeoffPoint> points(delta_grid.size());
  for (std::size_t gi = 0; gi < delta_grid.size(); ++gi) {
    const double delta = delta_grid[gi];
    const double tol = options.cost_match_rel_tol * std::max(1.0, delta);

    ClosedLoopTradeoffPoint point;
    point.delta = delta;
    point.mode = mode;

    InnerSolution chosen;
    double chosen_mu = 0.0;
    bool certified = false;

    if (unconstrained_cost <= delta + tol) {
      // Constraint inactive: the unconstrained sensitivity minimum applies.
      chosen = chain.back().sol;
      chosen_mu = 0.0;
      certified = true;
    } else {
      // Bisect mu between the bracketing chain entries. A fresh multi-start
      // polish can land on a better optimization branch; when it does, the
      // bisection is repeated with that branch cross-seeded into every solve.
      std::size_t hi_idx = 0;
      while (hi_idx < chain.size() && chain[hi_idx].sol.cost < delta) ++hi_idx;
      if (hi_idx == 0) {
        chosen = chain.front().sol;
        chosen_mu = chain.front().mu;
        certified = std::abs(chosen.cost - delta) <= tol;
      } else {
        std::vector<VectorXd> branch_seeds;
        for (int round = 0; round < 3; ++round) {
          double mu_lo = chain[hi_idx].mu;      // cost >= delta
          double mu_hi = chain[hi_idx - 1].mu;  // cost < delta
          InnerSolution sol_lo = chain[hi_idx].sol;
          InnerSolution sol_hi = chain[hi_idx - 1].sol;
          certified = false;
          for (int it = 0; it < 70; ++it) {
            const double mu_mid = std::sqrt(mu_lo * mu_hi);
            std::vector<VectorXd> starts = branch_seeds;
            starts.push_back(std::abs(std::log(mu_mid / mu_lo)) <
                                     std::abs(std::log(mu_mid / mu_hi))
                                 ? sol_lo.theta
                                 : sol_hi.theta);
            InnerSolution sol_mid = solve_scalarized(problem, mu_mid, starts, options);
            if (std::abs(sol_mid.cost - delta) <= tol) {
              chosen = std::move(sol_mid);
              chosen_mu = mu_mid;
              certified = true;
              break;
            }
            if (sol_mid.cost >= delta) {
              mu_lo = mu_mid;
              sol_lo = std::move(sol_mid);
            } else {
              mu_hi = mu_mid;
              sol_hi = std::move(sol_mid);
            }
          }
          if (!certified) {
            const bool lo_closer = std::abs(sol_lo.cost - delta) < std::abs(sol_hi.cost - delta);
            chosen = lo_closer ? sol_lo : sol_hi;
            chosen_mu = lo_closer ? mu_lo : mu_hi;
            break;
          }
          // Polish: accept as optimal only if a multi-start at the accepted
          // weight finds nothing better.
          InnerSolution polished = solve_scalarized(
              problem, chosen_mu,
              random_starts(problem, chosen.theta, options.multistarts,
                            options.seed + 977 + gi * 17 + round, chosen_mu),
              options);
          if (polished.objective >= chosen.objective - 1e-12) break;
          if (std::abs(polished.cost - delta) <= tol) {
            chosen = std::move(polished);
            break;
          }
          branch_seeds.push_back(polished.theta);
          certified = false;
        }
      }
    }

    MatrixXd K, L;
    problem.unpack(chosen.theta, K, L);
    point.K = std::move(K);
    point.L = std::move(L);
    point.mu = chosen_mu;
    point.certified = certified;
    // Final values through the residual-checked solvers.
    const ClosedLoopConfig final_cfg{plant, point.K, point.L, Wx, Wu, {}};
    point.cost = closed_loop_cost(final_cfg);
    point.sensitivity = cost_sensitivity(final_cfg);
    points[gi] = std::move(point);
  }
  return points;
}

LambdaFamilyPoint lambda_family_point_at_cost(const PlantWithInput& plant,
                                              const MatrixXd& Wx, const MatrixXd& Wu,
                                              double delta) {
  plant.validate();
  const SystemModel sys = plant.estimation_model();
  const LqrSolution lqr = solve_lqr_riccati(plant.A, plant.B, Wx, Wu);

  auto cost_at = [&](double lambda) -> std::pair<double, FilterGain> {
    FilterGain gain = optimal_gain(sys, lambda);
    const ClosedLoopConfig cfg{plant, gain.K, lqr.L, Wx, Wu, {}};
    try {
      return {closed_loop_cost(cfg), std::move(gain)};
    } catch (const InstabilityError&) {
      return {kInf, std::move(gain)};
    }
  };

  const double tol = 1e-8 * std::max(1.0, delta);
  auto make_point = [&](double lambda, const FilterGain& gain, double cost) {
    const ClosedLoopConfig cfg{plant, gain.K, lqr.L, Wx, Wu, {}};
    return LambdaFamilyPoint{lambda, gain.K, cost, cost_sensitivity(cfg)};
  };

  double lo = 0.0;  // cost(lo) = +inf side
  double hi = 1.0;
  auto [cost_hi, gain_hi] = cost_at(hi);
  while (cost_hi >= delta) {
    lo = hi;
    hi *= 2.0;
    if (hi >= kLambdaCap) {
      auto [cost_cap, gain_cap] = cost_at(kLambdaCap);
      return make_point(kLambdaCap, gain_cap, cost_cap);
    }
    std::tie(cost_hi, gain_hi) = cost_at(hi);
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = lo > 0.0 ? std::sqrt(lo * hi) : 0.5 * hi;
    auto [cost_mid, gain_mid] = cost_at(mid);
    if (std::isfinite(cost_mid) && std::abs(cost_mid - delta) <= tol)
      return make_point(mid, gain_mid, cost_mid);
    if (cost_mid >= delta)
      lo = mid;
    else
      hi = mid;
  }
  throw ConvergenceError("lambda_family_point_at_cost: bisection failed for delta " +
                         std::to_string(delta));
}

}  // namespace pareto_filter
