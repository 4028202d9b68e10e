#include "pareto_filter/monte_carlo.hpp"

#include <cmath>

#include "pareto_filter/parallel.hpp"

namespace pareto_filter {

SimulationRun simulate_filter(const SystemModel& sys, const FilterGain& gain,
                              const NoiseModel& w_model, const NoiseModel& v_model,
                              int horizon, std::uint64_t seed, int burn_in) {
  const Eigen::Index n = sys.state_dim(), m = sys.output_dim();
  if (w_model.dim() != n) throw ValidationError("simulate_filter: w model dimension != n");
  if (v_model.dim() != m) throw ValidationError("simulate_filter: v model dimension != m");
  if (burn_in < 0) throw ValidationError("simulate_filter: burn_in must be >= 0");
  if (horizon < burn_in + 1)
    throw ValidationError("simulate_filter: horizon must be >= burn_in + 1");

  SplitMix64 rng(seed);
  const MatrixXd sigma0_factor = psd_factor(sys.Sigma0());

  SimulationRun run;
  run.seed = seed;
  run.horizon = horizon;
  run.burn_in = burn_in;
  run.state_trajectory.reserve(horizon + 1);
  run.estimate_trajectory.reserve(horizon + 1);
  run.error_samples.reserve(horizon + 1);

  VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.next_gaussian();
  VectorXd x = sigma0_factor * z;
  VectorXd xhat = VectorXd::Zero(n);

  run.state_trajectory.push_back(x);
  run.estimate_trajectory.push_back(xhat);
  run.error_samples.push_back(x - xhat);

  const MatrixXd& A = sys.A();
  const MatrixXd& C = sys.C();
  const MatrixXd& K = gain.K;
  for (int t = 0; t < horizon; ++t) {
    x = A * x + w_model.sample(rng);
    const VectorXd y = C * x + v_model.sample(rng);
    const VectorXd pred = A * xhat;
    xhat = pred + K * (y - C * pred);
    run.state_trajectory.push_back(x);
    run.estimate_trajectory.push_back(xhat);
    run.error_samples.push_back(x - xhat);
  }
  return run;
}

double empirical_performance(const SimulationRun& run) {
  const int first = run.burn_in;
  const int count = static_cast<int>(run.error_samples.size()) - first;
  if (count < 1000)
    throw ValidationError("empirical_performance: needs >= 1000 post-burn-in samples, got " +
                          std::to_string(count));

  const Eigen::Index n = run.error_samples.front().size();
  VectorXd mean = VectorXd::Zero(n);
  for (int t = first; t < static_cast<int>(run.error_samples.size()); ++t)
    mean += run.error_samples[t];
  mean /= static_cast<double>(count);

  double sum_sq = 0.0;
  for (int t = first; t < static_cast<int>(run.error_samples.size()); ++t)
    sum_sq += (run.error_samples[t] - mean).squaredNorm();
  return sum_sq / static_cast<double>(count - 1);
}

double empirical_sensitivity(double p_nom, double p_adv) {
  if (!(p_nom > 0.0))
    throw ValidationError("empirical_sensitivity: nominal performance must be positive");
  return (p_adv - p_nom) / p_nom;
}

std::vector<SweepRecord> estimator_sweep(const SystemModel& sys,
                                         const std::vector<double>& delta_grid,
                                         const NoiseModel& v_nominal,
                                         const NoiseModel& v_adverse,
                                         int horizon,
                                         const std::vector<std::uint64_t>& seeds,
                                         int burn_in) {
  if (seeds.empty()) throw ValidationError("estimator_sweep: needs >= 1 seed");
  if (v_nominal.dim() != sys.output_dim() || v_adverse.dim() != sys.output_dim())
    throw ValidationError("estimator_sweep: noise model dimension != m");

  // Gains are designed against the nominal second moment.
  const SystemModel design_sys = sys.with_noise_covariance(v_nominal.second_moment());
  const NoiseModel w_model = NoiseModel::gaussian(sys.Q());

  std::vector<SweepRecord> records(delta_grid.size());
  std::vector<FilterGain> gains(delta_grid.size());
  for (std::size_t i = 0; i < delta_grid.size(); ++i) {
    const TradeoffPoint point = solve_lambda_for_delta(design_sys, delta_grid[i]);
    gains[i] = point.gain;
    records[i].delta = delta_grid[i];
    records[i].lambda = point.lambda;
  }

  // One work item per (delta, seed, model) cell, reduced in index order.
  struct Cell {
    double nominal = 0.0;
    double adverse = 0.0;
  };
  std::vector<Cell> cells(delta_grid.size() * seeds.size());
  parallel_for_index(cells.size(), [&](std::size_t idx) {
    const std::size_t gi = idx / seeds.size();
    const std::size_t si = idx % seeds.size();
    SplitMix64 seeder = SplitMix64::stream(seeds[si], gi);
    const std::uint64_t run_seed_nom = seeder.next_u64();
    const std::uint64_t run_seed_adv = seeder.next_u64();
    cells[idx].nominal = empirical_performance(simulate_filter(
        design_sys, gains[gi], w_model, v_nominal, horizon, run_seed_nom, burn_in));
    cells[idx].adverse = empirical_performance(simulate_filter(
        design_sys, gains[gi], w_model, v_adverse, horizon, run_seed_adv, burn_in));
  });

  for (std::size_t gi = 0; gi < delta_grid.size(); ++gi) {
    double p_nom = 0.0, p_adv = 0.0;
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      p_nom += cells[gi * seeds.size() + si].nominal;
      p_adv += cells[gi * seeds.size() + si].adverse;
    }
    p_nom /= static_cast<double>(seeds.size());
    p_adv /= static_cast<double>(seeds.size());
    records[gi].p_nominal = p_nom;
    records[gi].p_adverse = p_adv;
    records[gi].sensitivity = empirical_sensitivity(p_nom, p_adv);
  }
  return records;
}

}  // namespace pareto_filter
