#pragma once

#include <cstdint>
#include <vector>

#include "pareto_filter/filter_design.hpp"
#include "pareto_filter/noise_model.hpp"

namespace pareto_filter {

inline constexpr int kDefaultBurnIn = 1000;

// One seeded trajectory of the plant/filter pair. error_samples[t] is
// x(t) - xhat(t) for t = 0..T.
struct SimulationRun {
  std::uint64_t seed = 0;
  int horizon = 0;
  int burn_in = 0;
  std::vector<VectorXd> state_trajectory;
  std::vector<VectorXd> estimate_trajectory;
  std::vector<VectorXd> error_samples;
};

// Simulates x(t+1) = A x + w, y = C x + v and the filter
// xhat(t+1) = A xhat + K (y(t+1) - C A xhat) for T steps from
// x(0) ~ N(0, Sigma0), xhat(0) = 0. Identical inputs and seed reproduce the
// run bit for bit.
SimulationRun simulate_filter(const SystemModel& sys, const FilterGain& gain,
                              const NoiseModel& w_model, const NoiseModel& v_model,
                              int horizon, std::uint64_t seed,
                              int burn_in = kDefaultBurnIn);

/// Trace of the mean-removed sample covariance (divisor N-1) of the
/// post-burn-in error samples. Requires >= 1000 of them.
double empirical_performance(const SimulationRun& run);

/// Relative degradation (p_adv - p_nom) / p_nom; p_nom must be positive.
double empirical_sensitivity(double p_nom, double p_adv);

struct SweepRecord {
  double delta = 0.0;
  double lambda = 0.0;
  double p_nominal = 0.0;
  double p_adverse = 0.0;
  double sensitivity = 0.0;  // empirical, (p_adv - p_nom) / p_nom
};

// Designs one estimator per delta (via solve_lambda_for_delta with
// R = second moment of v_nominal), then measures each under the nominal and
// adverse measurement-noise models, averaging over the given seeds. Process
// noise is Gaussian with the model covariance Q.
std::vector<SweepRecord> estimator_sweep(const SystemModel& sys,
                                         const std::vector<double>& delta_grid,
                                         const NoiseModel& v_nominal,
                                         const NoiseModel& v_adverse,
                                         int horizon,
                                         const std::vector<std::uint64_t>& seeds,
                                         int burn_in = kDefaultBurnIn);

}  // namespace pareto_filter
