#include "pareto_filter/experiments.hpp"

#include <CLI11.hpp>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>

#include "pareto_filter/monte_carlo.hpp"
#include "pareto_filter/parallel.hpp"
#include "pareto_filter/presets.hpp"

namespace pareto_filter {

using nlohmann::json;

namespace {

std::vector<double> linspace(double lo, double hi, int count) {
  if (count < 1) throw ValidationError("grid needs >= 1 point");
  if (count == 1) return {lo};
  std::vector<double> grid(count);
  for (int i = 0; i < count; ++i)
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / (count - 1);
  return grid;
}

std::vector<double> geomspace(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > 0.0)) throw ValidationError("geometric grid needs positive bounds");
  if (count < 1) throw ValidationError("grid needs >= 1 point");
  if (count == 1) return {lo};
  std::vector<double> grid(count);
  const double ratio = std::log(hi / lo);
  for (int i = 0; i < count; ++i)
    grid[i] = lo * std::exp(ratio * static_cast<double>(i) / (count - 1));
  return grid;
}

void append_matrix_columns(CsvTable& table, const std::string& prefix,
                           Eigen::Index rows, Eigen::Index cols) {
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      table.columns.push_back(prefix + "_" + std::to_string(r) + "_" + std::to_string(c));
}

void append_matrix_values(std::vector<double>& row, const MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
}

std::vector<double> delta_grid_from_params(const json& params, double base,
                                           double fallback_lo_mult, double fallback_hi_mult,
                                           int fallback_steps) {
  if (params.contains("delta_values")) {
    const auto& values = params["delta_values"];
    if (!values.is_array() || values.empty())
      throw ValidationError("parameters.delta_values: expected a non-empty array");
    std::vector<double> grid;
    for (const auto& v : values) {
      if (!v.is_number()) throw ValidationError("parameters.delta_values: expected numbers");
      grid.push_back(v.get<double>());
    }
    return grid;
  }
  if (params.contains("delta_multipliers")) {
    const auto& values = params["delta_multipliers"];
    if (!values.is_array() || values.empty())
      throw ValidationError("parameters.delta_multipliers: expected a non-empty array");
    std::vector<double> grid;
    for (const auto& v : values) {
      if (!v.is_number())
        throw ValidationError("parameters.delta_multipliers: expected numbers");
      grid.push_back(v.get<double>() * base);
    }
    return grid;
  }
  const double lo = params.contains("delta_min") ? params["delta_min"].get<double>()
                                                 : fallback_lo_mult * base;
  const double hi = params.contains("delta_max") ? params["delta_max"].get<double>()
                                                 : fallback_hi_mult * base;
  const int steps = params.contains("delta_steps") ? params["delta_steps"].get<int>()
                                                   : fallback_steps;
  return linspace(lo, hi, steps);
}

CsvTable run_tradeoff(const ExperimentConfig& cfg) {
  const SystemModel& sys = *cfg.system;
  const json& params = cfg.parameters;

  const double perf_kalman = performance(sys, kalman_gain(sys));
  const double perf_zero = performance(sys, zero_gain(sys));
  const double lo =
      params.contains("delta_min") ? params["delta_min"].get<double>() : perf_kalman;
  const double hi =
      params.contains("delta_max") ? params["delta_max"].get<double>() : perf_zero;
  const int steps = params.contains("delta_steps") ? params["delta_steps"].get<int>() : 25;

  const std::vector<TradeoffPoint> curve = tradeoff_curve(sys, linspace(lo, hi, steps));

  CsvTable table;
  table.columns = {"delta", "lambda", "performance", "sensitivity"};
  append_matrix_columns(table, "k", sys.state_dim(), sys.output_dim());
  for (const TradeoffPoint& point : curve) {
    std::vector<double> row{point.delta, point.lambda, point.performance, point.sensitivity};
    append_matrix_values(row, point.gain.K);
    table.rows.push_back(std::move(row));
  }
  return table;
}

CsvTable run_design(const ExperimentConfig& cfg) {
  const SystemModel& sys = *cfg.system;
  const json& params = cfg.parameters;

  double lambda = 0.0, gamma = 0.0;
  FilterGain gain;
  if (params.contains("lambda")) {
    lambda = params["lambda"].get<double>();
    gain = optimal_gain(sys, lambda);
    gamma = lambda > 0.0 ? 1.0 / lambda : std::numeric_limits<double>::infinity();
  } else {
    gamma = params["gamma"].get<double>();
    gain = robust_gain(sys, gamma);
    lambda = 1.0 / gamma;
  }

  CsvTable table;
  table.columns = {"lambda", "gamma", "performance", "sensitivity",
                   "closed_loop_spectral_radius"};
  append_matrix_columns(table, "k", sys.state_dim(), sys.output_dim());
  std::vector<double> row{lambda, gamma, performance(sys, gain), sensitivity(sys, gain),
                          gain.closed_loop_spectral_radius};
  append_matrix_values(row, gain.K);
  table.rows.push_back(std::move(row));
  return table;
}

FilterGain gain_from_params(const SystemModel& sys, const json& params) {
  if (!params.contains("gain")) return kalman_gain(sys);
  const json& choice = params["gain"];
  if (choice.is_string()) {
    if (choice.get<std::string>() == "kalman") return kalman_gain(sys);
    throw ValidationError("parameters.gain: expected \"kalman\" or an object");
  }
  if (choice.is_object()) {
    if (choice.contains("lambda") && choice.size() == 1)
      return optimal_gain(sys, choice["lambda"].get<double>());
    if (choice.contains("gamma") && choice.size() == 1)
      return robust_gain(sys, choice["gamma"].get<double>());
    if (choice.contains("K") && choice.size() == 1)
      return make_filter_gain(sys, parse_matrix(choice["K"], "parameters.gain.K"));
  }
  throw ValidationError("parameters.gain: expected {lambda}, {gamma}, or {K}");
}

CsvTable run_simulate(const ExperimentConfig& cfg) {
  const SystemModel& sys = *cfg.system;
  const json& params = cfg.parameters;

  const int horizon = params.value("horizon", 200000);
  const int burn_in = params.value("burn_in", kDefaultBurnIn);
  const int trials = params.value("trials", 1);
  if (trials < 1) throw ValidationError("parameters.trials: must be >= 1");

  const FilterGain gain = gain_from_params(sys, params);
  const NoiseModel w_model = params.contains("w_noise")
                                 ? parse_noise_model(params["w_noise"], "parameters.w_noise",
                                                     cfg.base_dir)
                                 : NoiseModel::gaussian(sys.Q());
  const NoiseModel v_model = params.contains("v_noise")
                                 ? parse_noise_model(params["v_noise"], "parameters.v_noise",
                                                     cfg.base_dir)
                                 : NoiseModel::gaussian(sys.R());
  const double analytic = performance(sys, gain);

  CsvTable table;
  table.columns = {"trial", "empirical_performance", "analytic_performance"};
  table.rows.resize(trials);
  parallel_for_index(trials, [&](std::size_t trial) {
    SplitMix64 seeder = SplitMix64::stream(cfg.seed, trial);
    const SimulationRun run =
        simulate_filter(sys, gain, w_model, v_model, horizon, seeder.next_u64(), burn_in);
    table.rows[trial] = {static_cast<double>(trial), empirical_performance(run), analytic};
  });
  return table;
}

CsvTable run_rmse_sweep(const ExperimentConfig& cfg) {
  const PlantWithInput& plant = *cfg.plant;
  const json& params = cfg.parameters;

  for (const char* key : {"Wx", "Wu"})
    if (!params.contains(key))
      throw ValidationError(std::string("parameters.") + key + ": required for the rmse sweep");
  const MatrixXd Wx = parse_matrix(params["Wx"], "parameters.Wx");
  const MatrixXd Wu = parse_matrix(params["Wu"], "parameters.Wu");
  const double lambda_robust = params.value("lambda_robust", 0.307);
  const int horizon = params.value("horizon", 20000);
  const int trials = params.value("trials", 20);
  const double scale_min = params.value("scale_min", 1.0);
  double scale_max = params.value("scale_max", 25.0);
  if (!params.contains("scale_max") && params.contains("R_adverse")) {
    const MatrixXd R_adverse = parse_matrix(params["R_adverse"], "parameters.R_adverse");
    scale_max = R_adverse.trace() / plant.R.trace();
  }
  const int scale_steps = params.value("scale_steps", 10);

  const FilterGain kalman = steady_state_kalman_gain(plant.A, plant.C, plant.Q, plant.R);
  const FilterGain robust = optimal_gain(plant.estimation_model(), lambda_robust);
  const LqrSolution lqr = solve_lqr_riccati(plant.A, plant.B, Wx, Wu);

  std::vector<TimedWaypoint> course;
  if (params.contains("waypoints_path")) {
    const std::filesystem::path file = std::filesystem::path(cfg.base_dir) /
                                       params["waypoints_path"].get<std::string>();
    course = read_waypoints(file.string());
  } else {
    json course_params = params.value("course", json::object());
    course = rounded_rectangle_course(course_params.value("width", 40.0),
                                      course_params.value("height", 20.0),
                                      course_params.value("corner_radius", 5.0),
                                      course_params.value("speed", 2.0), plant.Ts,
                                      course_params.value("steps_per_waypoint", 5));
  }
  const int lap_steps = course.back().step;
  if (lap_steps < 1) throw ValidationError("rmse sweep: degenerate course");
  const int laps = horizon / lap_steps + 1;
  const std::vector<ReferencePoint> reference =
      reference_from_waypoints(plant, repeat_course(course, laps));

  ClosedLoopConfig cfg_kalman{plant, kalman.K, lqr.L, Wx, Wu, reference};
  ClosedLoopConfig cfg_robust{plant, robust.K, lqr.L, Wx, Wu, reference};

  std::vector<std::uint64_t> seeds(trials);
  for (int i = 0; i < trials; ++i) seeds[i] = cfg.seed + static_cast<std::uint64_t>(i);

  const std::vector<RmseSweepRecord> records = rmse_sweep(
      cfg_kalman, cfg_robust, geomspace(scale_min, scale_max, scale_steps), horizon, seeds);

  CsvTable table;
  table.columns = {"scale", "rmse_kalman", "rmse_robust", "stderr_kalman", "stderr_robust"};
  for (const RmseSweepRecord& rec : records)
    table.rows.push_back({rec.scale, rec.rmse_a, rec.rmse_b, rec.stderr_a, rec.stderr_b});
  return table;
}

CsvTable run_estimator_sweep(const ExperimentConfig& cfg) {
  const json& params = cfg.parameters;
  const SystemModel sys = cfg.system ? *cfg.system : cfg.plant->estimation_model();

  const NoiseModel v_nominal =
      parse_noise_model(params["v_nominal"], "parameters.v_nominal", cfg.base_dir);
  const NoiseModel v_adverse =
      parse_noise_model(params["v_adverse"], "parameters.v_adverse", cfg.base_dir);
  const int horizon = params.value("horizon", 200000);
  const int burn_in = params.value("burn_in", kDefaultBurnIn);
  const int trials = params.value("trials", 20);

  const SystemModel design_sys = sys.with_noise_covariance(v_nominal.second_moment());
  const double base = performance(design_sys, kalman_gain(design_sys));
  std::vector<double> grid;
  if (params.contains("delta_values") || params.contains("delta_multipliers") ||
      params.contains("delta_min") || params.contains("delta_max") ||
      params.contains("delta_steps")) {
    grid = delta_grid_from_params(params, base, 1.05, 2.6, 6);
  } else {
    for (double mult : {1.05, 1.2, 1.4, 1.7, 2.1, 2.6}) grid.push_back(mult * base);
  }

  std::vector<std::uint64_t> seeds(trials);
  for (int i = 0; i < trials; ++i) seeds[i] = cfg.seed + static_cast<std::uint64_t>(i);

  const std::vector<SweepRecord> records =
      estimator_sweep(sys, grid, v_nominal, v_adverse, horizon, seeds, burn_in);

  CsvTable table;
  table.columns = {"delta", "lambda", "p_nominal", "p_adverse", "sensitivity"};
  for (const SweepRecord& rec : records)
    table.rows.push_back({rec.delta, rec.lambda, rec.p_nominal, rec.p_adverse, rec.sensitivity});
  return table;
}

CsvTable run_closedloop_tradeoff(const ExperimentConfig& cfg) {
  const PlantWithInput& plant = *cfg.plant;
  const json& params = cfg.parameters;

  for (const char* key : {"Wx", "Wu"})
    if (!params.contains(key))
      throw ValidationError(std::string("parameters.") + key + ": required");
  const MatrixXd Wx = parse_matrix(params["Wx"], "parameters.Wx");
  const MatrixXd Wu = parse_matrix(params["Wu"], "parameters.Wu");
  const TradeoffMode mode = tradeoff_mode_from_name(params.value("mode", "fix-L-lqr"));

  const FilterGain kalman = steady_state_kalman_gain(plant.A, plant.C, plant.Q, plant.R);
  const LqrSolution lqr = solve_lqr_riccati(plant.A, plant.B, Wx, Wu);
  const double cost_min =
      closed_loop_cost(ClosedLoopConfig{plant, kalman.K, lqr.L, Wx, Wu, {}});

  const std::vector<double> grid = delta_grid_from_params(params, cost_min, 1.05, 2.0, 10);

  ClosedLoopTradeoffOptions options;
  options.seed = cfg.seed;
  options.multistarts = params.value("multistarts", options.multistarts);

  const std::vector<ClosedLoopTradeoffPoint> points =
      closed_loop_tradeoff(plant, Wx, Wu, grid, mode, options);

  CsvTable table;
  table.columns = {"delta", "cost", "sensitivity", "mu", "certified"};
  append_matrix_columns(table, "k", plant.state_dim(), plant.output_dim());
  append_matrix_columns(table, "l", plant.input_dim(), plant.state_dim());
  for (const ClosedLoopTradeoffPoint& point : points) {
    std::vector<double> row{point.delta, point.cost, point.sensitivity, point.mu,
                            point.certified ? 1.0 : 0.0};
    append_matrix_values(row, point.K);
    append_matrix_values(row, point.L);
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace

std::string provenance_comment(const ExperimentConfig& cfg) {
  char buffer[128];
  std::snprintf(buffer, sizeof(buffer),
                "provenance: config_hash=%016" PRIx64 " seed=%" PRIu64 " version=%s",
                config_hash(cfg.document), cfg.seed, kToolVersion);
  return buffer;
}

CsvTable run_experiment(const ExperimentConfig& cfg) {
  CsvTable table;
  if (cfg.experiment == "tradeoff") {
    table = run_tradeoff(cfg);
  } else if (cfg.experiment == "design") {
    table = run_design(cfg);
  } else if (cfg.experiment == "simulate") {
    table = run_simulate(cfg);
  } else if (cfg.experiment == "sweep") {
    table = cfg.parameters["kind"] == "rmse" ? run_rmse_sweep(cfg) : run_estimator_sweep(cfg);
  } else if (cfg.experiment == "closedloop-tradeoff") {
    table = run_closedloop_tradeoff(cfg);
  } else {
    throw ValidationError("run_experiment: unknown experiment " + cfg.experiment);
  }
  if (!cfg.output_path.empty()) write_csv(cfg.output_path, table, provenance_comment(cfg));
  return table;
}

namespace {

void emit_error(std::ostream& err, const std::string& type, const std::string& message) {
  const json record = {{"error", {{"type", type}, {"message", message}}}};
  err << record.dump() << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Accuracy/robustness trade-off designer for linear state estimators"};
  app.set_version_flag("--version", kToolVersion);

  std::string config_path, preset_name, output_path, mode;
  std::int64_t seed = -1;
  double delta_min = NAN, delta_max = NAN, lambda = NAN, gamma = NAN;
  int delta_steps = -1, horizon = -1, trials = -1;

  auto* config_opt = app.add_option("--config", config_path, "Experiment config JSON file");
  auto* preset_opt = app.add_option("--preset", preset_name, "Built-in preset (example1, vehicle)");
  config_opt->excludes(preset_opt);
  app.add_option("--out", output_path, "Output CSV path override");
  app.add_option("--seed", seed, "Master seed override");
  app.add_option("--delta-min", delta_min, "Lower bound of the error-target grid");
  app.add_option("--delta-max", delta_max, "Upper bound of the error-target grid");
  app.add_option("--delta-steps", delta_steps, "Number of error-target grid points");
  app.add_option("--lambda", lambda, "Design multiplier (design; robust filter in sweeps)");
  app.add_option("--gamma", gamma, "Perturbation budget (design)");
  app.add_option("--mode", mode, "Closed-loop trade-off mode");
  app.add_option("--horizon", horizon, "Simulation horizon override");
  app.add_option("--trials", trials, "Monte Carlo trial count override");

  std::vector<std::string> cli_args(args.rbegin(), args.rend());
  try {
    app.parse(cli_args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    emit_error(err, "parse", e.what());
    return kExitParseError;
  }

  try {
    json document;
    std::string base_dir = ".";
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) {
        emit_error(err, "parse", "cannot open config file: " + config_path);
        return kExitParseError;
      }
      document = json::parse(in);
      base_dir = std::filesystem::path(config_path).parent_path().string();
      if (base_dir.empty()) base_dir = ".";
    } else if (!preset_name.empty()) {
      document = preset(preset_name).document;
    } else {
      emit_error(err, "parse", "one of --config or --preset is required");
      return kExitParseError;
    }

    if (document.is_object()) {  // otherwise parse_config reports the shape error
      if (!output_path.empty()) document["output_path"] = output_path;
      if (seed >= 0) document["seed"] = seed;
      json& params = document["parameters"];
      if (!params.is_object()) params = json::object();
      if (!std::isnan(delta_min)) params["delta_min"] = delta_min;
      if (!std::isnan(delta_max)) params["delta_max"] = delta_max;
      if (delta_steps >= 0) params["delta_steps"] = delta_steps;
      if (!std::isnan(gamma)) params["gamma"] = gamma;
      if (!std::isnan(lambda)) {
        if (document.value("experiment", "") == "sweep")
          params["lambda_robust"] = lambda;
        else
          params["lambda"] = lambda;
      }
      if (!mode.empty()) params["mode"] = mode;
      if (horizon >= 0) params["horizon"] = horizon;
      if (trials >= 0) params["trials"] = trials;
    }

    const ExperimentConfig cfg = parse_config(document, base_dir);
    const CsvTable table = run_experiment(cfg);
    out << "wrote " << (cfg.output_path.empty() ? "(no file)" : cfg.output_path) << " ("
        << table.rows.size() << " rows)\n";
    return kExitOk;
  } catch (const json::parse_error& e) {
    emit_error(err, "parse", e.what());
    return kExitParseError;
  } catch (const json::exception& e) {
    emit_error(err, "validation", e.what());
    return kExitValidationError;
  } catch (const std::ios_base::failure& e) {
    emit_error(err, "parse", e.what());
    return kExitParseError;
  } catch (const DimensionError& e) {
    emit_error(err, "validation", e.what());
    return kExitValidationError;
  } catch (const ValidationError& e) {
    emit_error(err, "validation", e.what());
    return kExitValidationError;
  } catch (const InfeasibleTargetError& e) {
    emit_error(err, "infeasible", e.what());
    return kExitSolverError;
  } catch (const InstabilityError& e) {
    emit_error(err, "instability", e.what());
    return kExitSolverError;
  } catch (const ConvergenceError& e) {
    emit_error(err, "convergence", e.what());
    return kExitSolverError;
  } catch (const Error& e) {
    emit_error(err, "error", e.what());
    return kExitSolverError;
  }
}

}  // namespace pareto_filter
