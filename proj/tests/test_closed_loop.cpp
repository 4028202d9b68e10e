#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pareto_filter/closed_loop.hpp"
#include "pareto_filter/monte_carlo.hpp"

using namespace pareto_filter;
namespace oracle = pareto_filter::testing;

namespace {

// Random plant with generically stabilizable/detectable structure.
PlantWithInput random_plant(SplitMix64& rng, Eigen::Index n, Eigen::Index p,
                            Eigen::Index m, double target_rho) {
  PlantWithInput plant;
  plant.A = oracle::random_stable_matrix(rng, n, target_rho);
  plant.B = oracle::random_matrix(rng, n, p);
  plant.C = oracle::random_matrix(rng, m, n);
  plant.Q = oracle::random_psd(rng, n, 0.05);
  plant.R = oracle::random_psd(rng, m, 0.2);
  plant.Sigma0 = MatrixXd::Zero(n, n);
  plant.Ts = 1.0;
  return plant;
}

MatrixXd vehicle_Wx() {
  MatrixXd Wx = MatrixXd::Zero(4, 4);
  Wx.diagonal() << 100.0, 1e-3, 100.0, 1e-3;
  return Wx;
}

MatrixXd vehicle_Wu() { return 1e-3 * MatrixXd::Identity(2, 2); }

ClosedLoopConfig vehicle_lqg_config() {
  const PlantWithInput plant = vehicle_preset(1.0);
  const FilterGain kf = steady_state_kalman_gain(plant.A, plant.C, plant.Q, plant.R);
  const LqrSolution lqr = solve_lqr_riccati(plant.A, plant.B, vehicle_Wx(), vehicle_Wu());
  return ClosedLoopConfig{plant, kf.K, lqr.L, vehicle_Wx(), vehicle_Wu(), {}};
}

// Monte Carlo estimate of the quadratic regulation cost.
double monte_carlo_cost(const ClosedLoopConfig& cfg, int horizon, int trials,
                        std::uint64_t master_seed) {
  const NoiseModel w_model = NoiseModel::gaussian(cfg.plant.Q);
  const NoiseModel v_model = NoiseModel::gaussian(cfg.plant.R);
  double total = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    SplitMix64 seeder = SplitMix64::stream(master_seed, trial);
    const TrackingResult run =
        tracking_simulate(cfg, w_model, v_model, horizon, seeder.next_u64());
    double sum = 0.0;
    for (int t = 0; t <= horizon; ++t) {
      const VectorXd& x = run.states[t];
      const VectorXd u = -cfg.L * run.controller_states[t];
      sum += x.dot(cfg.Wx * x) + u.dot(cfg.Wu * u);
    }
    total += sum / (horizon + 1);
  }
  return total / trials;
}

}  // namespace

TEST_CASE("vehicle preset matrices") {
  const PlantWithInput plant = vehicle_preset(1.0);
  MatrixXd A_expected(4, 4);
  A_expected << 1, 1, 0, 0, 0, 1, 0, 0, 0, 0, 1, 1, 0, 0, 0, 1;
  CHECK((plant.A - A_expected).norm() == 0.0);

  MatrixXd C_expected(2, 4);
  C_expected << 1, 0, 0, 0, 0, 0, 1, 0;
  CHECK((plant.C - C_expected).norm() == 0.0);
  CHECK((plant.Q - 0.1 * MatrixXd::Identity(4, 4)).norm() == 0.0);
  CHECK((plant.R - 0.1 * MatrixXd::Identity(2, 2)).norm() == 0.0);

  const PlantWithInput half = vehicle_preset(0.5);
  MatrixXd B_expected(4, 2);
  B_expected << 0, 0, 0.5, 0, 0, 0, 0, 0.5;
  CHECK((half.B - B_expected).norm() == 0.0);

  CHECK_THROWS_AS(vehicle_preset(0.0), ValidationError);
}

TEST_CASE("augmented closed loop block structure") {
  SplitMix64 rng(13);
  const PlantWithInput plant = random_plant(rng, 3, 2, 2, 0.7);
  const MatrixXd Wx = MatrixXd::Identity(3, 3);
  const MatrixXd Wu = MatrixXd::Identity(2, 2);

  SUBCASE("zero gains decouple the blocks") {
    const ClosedLoopConfig cfg{plant, MatrixXd::Zero(3, 2), MatrixXd::Zero(2, 3), Wx, Wu, {}};
    const AugmentedClosedLoop loop = augmented_closed_loop(cfg);
    CHECK((loop.A.topLeftCorner(3, 3) - plant.A).norm() == 0.0);
    CHECK((loop.A.bottomRightCorner(3, 3) - plant.A).norm() == 0.0);
    CHECK(loop.A.topRightCorner(3, 3).norm() == 0.0);
    CHECK(loop.A.bottomLeftCorner(3, 3).norm() == 0.0);
    CHECK(loop.Bv.norm() == 0.0);
  }

  SUBCASE("zero estimator gain with LQR feedback") {
    const LqrSolution lqr = solve_lqr_riccati(plant.A, plant.B, Wx, Wu);
    const ClosedLoopConfig cfg{plant, MatrixXd::Zero(3, 2), lqr.L, Wx, Wu, {}};
    const AugmentedClosedLoop loop = augmented_closed_loop(cfg);
    CHECK((loop.A.topLeftCorner(3, 3) - plant.A).norm() == 0.0);
    CHECK(loop.A.bottomLeftCorner(3, 3).norm() == 0.0);
    CHECK((loop.A.topRightCorner(3, 3) + plant.B * lqr.L).norm() <= 1e-14);
  }
}

TEST_CASE("separation: the LQG loop is stable and splits its spectrum") {
  const ClosedLoopConfig cfg = vehicle_lqg_config();
  const AugmentedClosedLoop loop = augmented_closed_loop(cfg);
  CHECK(loop.spectral_radius < 1.0);

  const double rho_filter = spectral_radius(cfg.plant.A - cfg.K * cfg.plant.C * cfg.plant.A);
  const double rho_control = spectral_radius(cfg.plant.A - cfg.plant.B * cfg.L);
  CHECK(loop.spectral_radius ==
        doctest::Approx(std::max(rho_filter, rho_control)).epsilon(1e-9));
}

TEST_CASE("marginally stable plant with a zero estimator gain is rejected") {
  const PlantWithInput plant = vehicle_preset(1.0);
  const LqrSolution lqr = solve_lqr_riccati(plant.A, plant.B, vehicle_Wx(), vehicle_Wu());
  const ClosedLoopConfig cfg{plant, MatrixXd::Zero(4, 2), lqr.L, vehicle_Wx(), vehicle_Wu(), {}};
  CHECK_THROWS_AS(augmented_closed_loop(cfg), InstabilityError);
}

TEST_CASE("separation principle holds on random plants") {
  SplitMix64 rng(303);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.next_uniform() * 3);
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(rng.next_uniform() * 2);
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng.next_uniform() * 2);
    const double rho = 0.3 + 0.85 * rng.next_uniform();  // includes unstable plants
    const PlantWithInput plant = random_plant(rng, n, p, m, rho);
    const MatrixXd Wx = oracle::random_psd(rng, n, 0.5);
    const MatrixXd Wu = oracle::random_psd(rng, p, 0.5);

    const FilterGain kf = steady_state_kalman_gain(plant.A, plant.C, plant.Q, plant.R);
    const LqrSolution lqr = solve_lqr_riccati(plant.A, plant.B, Wx, Wu);
    const ClosedLoopConfig cfg{plant, kf.K, lqr.L, Wx, Wu, {}};
    CHECK(augmented_closed_loop(cfg).spectral_radius < 1.0);
  }
}

TEST_CASE("closed-loop cost vanishes without excitation") {
  PlantWithInput plant = vehicle_preset(1.0);
  plant.Q = MatrixXd::Zero(4, 4);
  plant.R = 1e-12 * MatrixXd::Identity(2, 2);
  const FilterGain kf = steady_state_kalman_gain(plant.A, plant.C,
                                                 0.1 * MatrixXd::Identity(4, 4),
                                                 0.1 * MatrixXd::Identity(2, 2));
  const LqrSolution lqr = solve_lqr_riccati(plant.A, plant.B, vehicle_Wx(), vehicle_Wu());
  const ClosedLoopConfig cfg{plant, kf.K, lqr.L, vehicle_Wx(), vehicle_Wu(), {}};
  CHECK(closed_loop_cost(cfg) <= 1e-8);
}

TEST_CASE("closed-loop cost matches Monte Carlo on the vehicle") {
  const ClosedLoopConfig cfg = vehicle_lqg_config();
  const double analytic = closed_loop_cost(cfg);
  const double empirical = monte_carlo_cost(cfg, 50000, 20, 8143);
  CHECK(std::abs(empirical - analytic) <= 0.02 * analytic);
}

TEST_CASE("closed-loop cost matches Monte Carlo on random plants") {
  SplitMix64 rng(909);
  for (int trial = 0; trial < 10; ++trial) {
    const PlantWithInput plant = random_plant(rng, 3, 2, 2, 0.5 + 0.4 * rng.next_uniform());
    const MatrixXd Wx = oracle::random_psd(rng, 3, 0.5);
    const MatrixXd Wu = oracle::random_psd(rng, 2, 0.5);
    const FilterGain kf = steady_state_kalman_gain(plant.A, plant.C, plant.Q, plant.R);
    const LqrSolution lqr = solve_lqr_riccati(plant.A, plant.B, Wx, Wu);
    const ClosedLoopConfig cfg{plant, kf.K, lqr.L, Wx, Wu, {}};

    const double analytic = closed_loop_cost(cfg);
    const double empirical = monte_carlo_cost(cfg, 30000, 8, 7000 + trial);
    // 3x standard error, conservatively ~1% of the cost at this sample size.
    CHECK(std::abs(empirical - analytic) <= 0.03 * analytic);
  }
}

TEST_CASE("the LQG pair minimizes the closed-loop cost") {
  const ClosedLoopConfig base = vehicle_lqg_config();
  const double optimal = closed_loop_cost(base);
  SplitMix64 rng(616);
  int tested = 0;
  while (tested < 100) {
    ClosedLoopConfig cfg = base;
    cfg.K += 0.1 * oracle::random_matrix(rng, 4, 2);
    cfg.L += 0.1 * oracle::random_matrix(rng, 2, 4);
    try {
      CHECK(closed_loop_cost(cfg) >= optimal - 1e-9);
      ++tested;
    } catch (const InstabilityError&) {
      // destabilizing perturbation; draw again
    }
  }
}

TEST_CASE("cost sensitivity closed forms and finite differences") {
  SplitMix64 rng(5501);
  const PlantWithInput plant = random_plant(rng, 3, 2, 2, 0.7);
  const MatrixXd Wx = MatrixXd::Identity(3, 3);
  const MatrixXd Wu = MatrixXd::Identity(2, 2);
  const LqrSolution lqr = solve_lqr_riccati(plant.A, plant.B, Wx, Wu);

  SUBCASE("zero estimator gain decouples the cost from R") {
    const ClosedLoopConfig cfg{plant, MatrixXd::Zero(3, 2), lqr.L, Wx, Wu, {}};
    CHECK(cost_sensitivity(cfg) == doctest::Approx(0.0).epsilon(1e-14));
  }

  SUBCASE("matches the central difference along the identity direction") {
    const ClosedLoopConfig cfg = vehicle_lqg_config();
    const double analytic = cost_sensitivity(cfg);
    const double h = 1e-6;
    ClosedLoopConfig plus = cfg, minus = cfg;
    plus.plant.R += h * MatrixXd::Identity(2, 2);
    minus.plant.R -= h * MatrixXd::Identity(2, 2);
    const double fd = (closed_loop_cost(plus) - closed_loop_cost(minus)) / (2.0 * h);
    CHECK(std::abs(analytic - fd) <= 1e-5 * std::max(1.0, std::abs(analytic)));
  }
}

TEST_CASE("cost sensitivity agrees with finite differences on random loops") {
  SplitMix64 rng(7203);
  int tested = 0;
  while (tested < 20) {
    const PlantWithInput plant = random_plant(rng, 3, 2, 2, 0.5 + 0.4 * rng.next_uniform());
    const MatrixXd Wx = oracle::random_psd(rng, 3, 0.5);
    const MatrixXd Wu = oracle::random_psd(rng, 2, 0.5);
    const FilterGain kf = steady_state_kalman_gain(plant.A, plant.C, plant.Q, plant.R);
    const LqrSolution lqr = solve_lqr_riccati(plant.A, plant.B, Wx, Wu);
    ClosedLoopConfig cfg{plant, kf.K, lqr.L, Wx, Wu, {}};
    cfg.K += 0.05 * oracle::random_matrix(rng, 3, 2);
    cfg.L += 0.05 * oracle::random_matrix(rng, 2, 3);
    try {
      const double analytic = cost_sensitivity(cfg);
      const double h = 1e-6;
      ClosedLoopConfig plus = cfg, minus = cfg;
      plus.plant.R += h * MatrixXd::Identity(2, 2);
      minus.plant.R -= h * MatrixXd::Identity(2, 2);
      const double fd = (closed_loop_cost(plus) - closed_loop_cost(minus)) / (2.0 * h);
      CHECK(std::abs(analytic - fd) <= 1e-5 * std::max(1.0, std::abs(analytic)));
      ++tested;
    } catch (const InstabilityError&) {
    }
  }
}

TEST_CASE("cost sensitivity grows along the zero-to-Kalman gain path") {
  SplitMix64 rng(88);
  const PlantWithInput plant = random_plant(rng, 3, 2, 2, 0.7);
  const MatrixXd Wx = MatrixXd::Identity(3, 3);
  const MatrixXd Wu = MatrixXd::Identity(2, 2);
  const FilterGain kf = steady_state_kalman_gain(plant.A, plant.C, plant.Q, plant.R);
  const LqrSolution lqr = solve_lqr_riccati(plant.A, plant.B, Wx, Wu);

  double previous = -1.0;
  for (int i = 0; i <= 10; ++i) {
    const double t = i / 10.0;
    const ClosedLoopConfig cfg{plant, t * kf.K, lqr.L, Wx, Wu, {}};
    const double s = cost_sensitivity(cfg);
    CHECK(s >= previous);
    previous = s;
  }
}

TEST_CASE("waypoint references") {
  const PlantWithInput plant = vehicle_preset(1.0);

  SUBCASE("a straight segment needs no interior input") {
    std::vector<TimedWaypoint> line(2);
    line[0] = {0, (VectorXd(2) << 0.0, 0.0).finished()};
    line[1] = {10, (VectorXd(2) << 5.0, -5.0).finished()};
    const std::vector<ReferencePoint> ref = reference_from_waypoints(plant, line);
    REQUIRE(ref.size() == 11);
    for (const ReferencePoint& r : ref) CHECK(r.u_d.norm() <= 1e-14);
    CHECK(ref.back().x_d(0) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(ref.back().x_d(2) == doctest::Approx(-5.0).epsilon(1e-12));
  }

  SUBCASE("the reference is exactly feasible and closed loops return to start") {
    std::vector<TimedWaypoint> square(5);
    square[0] = {0, (VectorXd(2) << 0.0, 0.0).finished()};
    square[1] = {10, (VectorXd(2) << 10.0, 0.0).finished()};
    square[2] = {20, (VectorXd(2) << 10.0, 10.0).finished()};
    square[3] = {30, (VectorXd(2) << 0.0, 10.0).finished()};
    square[4] = {40, (VectorXd(2) << 0.0, 0.0).finished()};
    const std::vector<ReferencePoint> ref = reference_from_waypoints(plant, square);

    VectorXd x = ref.front().x_d;
    for (std::size_t t = 0; t + 1 < ref.size(); ++t) {
      x = plant.A * x + plant.B * ref[t].u_d;
      CHECK((x - ref[t + 1].x_d).norm() <= 1e-12);
    }
    CHECK(std::abs(ref.back().x_d(0) - ref.front().x_d(0)) <= 1e-9);
    CHECK(std::abs(ref.back().x_d(2) - ref.front().x_d(2)) <= 1e-9);
  }

  SUBCASE("a repeated waypoint gives a constant reference") {
    std::vector<TimedWaypoint> hold(2);
    hold[0] = {0, (VectorXd(2) << 3.0, 4.0).finished()};
    hold[1] = {25, (VectorXd(2) << 3.0, 4.0).finished()};
    const std::vector<ReferencePoint> ref = reference_from_waypoints(plant, hold);
    for (const ReferencePoint& r : ref) {
      CHECK(r.u_d.norm() == 0.0);
      CHECK(r.x_d(0) == 3.0);
      CHECK(r.x_d(2) == 4.0);
      CHECK(r.x_d(1) == 0.0);
    }
  }

  SUBCASE("validation of ordering and plant structure") {
    std::vector<TimedWaypoint> bad(2);
    bad[0] = {0, VectorXd::Zero(2)};
    bad[1] = {0, VectorXd::Ones(2)};
    CHECK_THROWS_AS(reference_from_waypoints(plant, bad), ValidationError);

    SplitMix64 rng(4);
    const PlantWithInput generic = random_plant(rng, 4, 2, 2, 0.7);
    std::vector<TimedWaypoint> ok(2);
    ok[0] = {0, VectorXd::Zero(2)};
    ok[1] = {5, VectorXd::Ones(2)};
    CHECK_THROWS_AS(reference_from_waypoints(generic, ok), ValidationError);
  }
}

TEST_CASE("rounded rectangle course closes and repeats") {
  const std::vector<TimedWaypoint> course = rounded_rectangle_course(40, 20, 5, 2.0, 1.0);
  REQUIRE(course.size() >= 3);
  CHECK(course.front().step == 0);
  CHECK((course.front().position - course.back().position).norm() <= 1e-9);
  for (std::size_t i = 1; i < course.size(); ++i)
    CHECK(course[i].step > course[i - 1].step);

  const std::vector<TimedWaypoint> tiled = repeat_course(course, 3);
  CHECK(tiled.back().step == 3 * course.back().step);
  const PlantWithInput plant = vehicle_preset(1.0);
  const std::vector<ReferencePoint> ref = reference_from_waypoints(plant, tiled);
  VectorXd x = ref.front().x_d;
  for (std::size_t t = 0; t + 1 < ref.size(); ++t) {
    x = plant.A * x + plant.B * ref[t].u_d;
    CHECK((x - ref[t + 1].x_d).norm() <= 1e-10);
  }
}

TEST_CASE("tracking is exact without noise") {
  const PlantWithInput base = vehicle_preset(1.0);
  PlantWithInput plant = base;
  plant.Q = MatrixXd::Zero(4, 4);

  const FilterGain kf = steady_state_kalman_gain(base.A, base.C, base.Q, base.R);
  const LqrSolution lqr = solve_lqr_riccati(base.A, base.B, vehicle_Wx(), vehicle_Wu());
  const std::vector<ReferencePoint> ref = reference_from_waypoints(
      plant, repeat_course(rounded_rectangle_course(40, 20, 5, 2.0, 1.0), 4));
  const int horizon = static_cast<int>(ref.size()) - 1;

  const ClosedLoopConfig cfg{plant, kf.K, lqr.L, vehicle_Wx(), vehicle_Wu(), ref};
  const NoiseModel w_zero = NoiseModel::gaussian(MatrixXd::Zero(4, 4));
  const NoiseModel v_zero = NoiseModel::gaussian(MatrixXd::Zero(2, 2));
  const TrackingResult result = tracking_simulate(cfg, w_zero, v_zero, horizon, 99);
  CHECK(result.rmse <= 1e-8);
}

TEST_CASE("tracking error decays geometrically without noise") {
  PlantWithInput plant = vehicle_preset(1.0);
  plant.Q = MatrixXd::Zero(4, 4);
  plant.Sigma0 = 0.5 * MatrixXd::Identity(4, 4);

  const ClosedLoopConfig base = vehicle_lqg_config();
  ClosedLoopConfig cfg{plant, base.K, base.L, base.Wx, base.Wu, {}};
  const double rho = augmented_closed_loop(cfg).spectral_radius;

  const NoiseModel w_zero = NoiseModel::gaussian(MatrixXd::Zero(4, 4));
  const NoiseModel v_zero = NoiseModel::gaussian(MatrixXd::Zero(2, 2));
  const TrackingResult run = tracking_simulate(cfg, w_zero, v_zero, 120, 3);

  const auto deviation = [&](int t) {
    VectorXd z(8);
    z << run.states[t], run.controller_states[t];
    return z.norm();
  };
  // Geometric decay at rate rho + 1e-6: the envelope constant established over
  // the transient bounds every later sample.
  const double rate = rho + 1e-6;
  double envelope = 0.0;
  for (int t = 0; t <= 30; ++t)
    envelope = std::max(envelope, deviation(t) / std::pow(rate, t));
  for (int t = 31; t <= 120; ++t)
    CHECK(deviation(t) <= envelope * std::pow(rate, t) * (1.0 + 1e-9));
}

TEST_CASE("tracking rejects a short reference") {
  const ClosedLoopConfig base = vehicle_lqg_config();
  ClosedLoopConfig cfg = base;
  cfg.reference = reference_from_waypoints(
      cfg.plant, rounded_rectangle_course(40, 20, 5, 2.0, 1.0));
  const NoiseModel w = NoiseModel::gaussian(cfg.plant.Q);
  const NoiseModel v = NoiseModel::gaussian(cfg.plant.R);
  CHECK_THROWS_AS(
      tracking_simulate(cfg, w, v, static_cast<int>(cfg.reference.size()) + 50, 1),
      ValidationError);
}

TEST_CASE("Kalman tracks better nominally, the robust filter under inflated noise") {
  const PlantWithInput plant = vehicle_preset(1.0);
  const FilterGain kf = steady_state_kalman_gain(plant.A, plant.C, plant.Q, plant.R);
  const FilterGain robust = optimal_gain(plant.estimation_model(), 0.307);
  const LqrSolution lqr = solve_lqr_riccati(plant.A, plant.B, vehicle_Wx(), vehicle_Wu());

  const std::vector<ReferencePoint> ref = reference_from_waypoints(
      plant, repeat_course(rounded_rectangle_course(40, 20, 5, 2.0, 1.0), 150));
  const int horizon = 8000;
  REQUIRE(static_cast<int>(ref.size()) > horizon);

  const ClosedLoopConfig cfg_kf{plant, kf.K, lqr.L, vehicle_Wx(), vehicle_Wu(), ref};
  const ClosedLoopConfig cfg_rb{plant, robust.K, lqr.L, vehicle_Wx(), vehicle_Wu(), ref};

  const std::vector<std::uint64_t> seeds{21, 22, 23, 24, 25, 26};
  const std::vector<RmseSweepRecord> nominal = rmse_sweep(cfg_kf, cfg_rb, {1.0}, horizon, seeds);
  CHECK(nominal.front().rmse_a < nominal.front().rmse_b);

  const std::vector<RmseSweepRecord> adverse = rmse_sweep(cfg_kf, cfg_rb, {25.0}, horizon, seeds);
  CHECK(adverse.front().rmse_a > adverse.front().rmse_b);
}

TEST_CASE("closed-loop trade-off recovers the zero-sensitivity endpoint") {
  SplitMix64 rng(112);
  const PlantWithInput plant = random_plant(rng, 3, 2, 2, 0.65);
  const MatrixXd Wx = MatrixXd::Identity(3, 3);
  const MatrixXd Wu = MatrixXd::Identity(2, 2);
  const LqrSolution lqr = solve_lqr_riccati(plant.A, plant.B, Wx, Wu);
  const double delta =
      closed_loop_cost(ClosedLoopConfig{plant, MatrixXd::Zero(3, 2), lqr.L, Wx, Wu, {}});

  ClosedLoopTradeoffOptions options;
  options.multistarts = 5;
  const std::vector<ClosedLoopTradeoffPoint> points = closed_loop_tradeoff(
      plant, Wx, Wu, {delta}, TradeoffMode::kFixControllerLqr, options);
  REQUIRE(points.size() == 1);
  CHECK(points.front().sensitivity <= 1e-5);
  CHECK(points.front().K.norm() <= 1e-2);
  CHECK((points.front().L - lqr.L).norm() == 0.0);
}

TEST_CASE("closed-loop trade-off smoke on the vehicle") {
  const PlantWithInput plant = vehicle_preset(1.0);
  const ClosedLoopConfig base = vehicle_lqg_config();
  const double cost_min = closed_loop_cost(base);

  ClosedLoopTradeoffOptions options;
  options.multistarts = 5;
  const std::vector<double> grid{1.1 * cost_min, 1.6 * cost_min};
  const std::vector<ClosedLoopTradeoffPoint> points = closed_loop_tradeoff(
      plant, vehicle_Wx(), vehicle_Wu(), grid, TradeoffMode::kFixControllerLqr, options);

  REQUIRE(points.size() == 2);
  for (const ClosedLoopTradeoffPoint& point : points) {
    CHECK(point.certified);
    CHECK(std::abs(point.cost - point.delta) <= 1e-4 * point.delta);
  }
  CHECK(points[1].sensitivity < points[0].sensitivity);
  CHECK(points[0].sensitivity < cost_sensitivity(base));

  CHECK_THROWS_AS(closed_loop_tradeoff(plant, vehicle_Wx(), vehicle_Wu(),
                                       {0.5 * cost_min}, TradeoffMode::kFixControllerLqr),
                  InfeasibleTargetError);
}

TEST_CASE("trade-off mode names round-trip") {
  for (const TradeoffMode mode : {TradeoffMode::kOptimizeBoth, TradeoffMode::kFixControllerLqr,
                                  TradeoffMode::kFixEstimatorKalman})
    CHECK(tradeoff_mode_from_name(tradeoff_mode_name(mode)) == mode);
  CHECK_THROWS_AS(tradeoff_mode_from_name("bogus"), ValidationError);
}
