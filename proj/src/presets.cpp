#include "pareto_filter/presets.hpp"

namespace pareto_filter {

using nlohmann::json;

SystemModel example1_system() {
  MatrixXd A(2, 2), C(2, 2), Q(2, 2), R(2, 2);
  A << 0.9, 0.0, 0.02, 0.8;
  C << 0.5, -0.8, 0.0, 0.7;
  Q << 0.5, 0.0, 0.0, 0.7;
  R << 0.5, 0.1, 0.1, 0.8;
  return SystemModel(A, C, Q, R, MatrixXd::Identity(2, 2));
}

ExperimentConfig preset(const std::string& name) {
  if (name == "example1") {
    const json document = {
        {"experiment", "tradeoff"},
        {"system",
         {{"A", {{0.9, 0.0}, {0.02, 0.8}}},
          {"C", {{0.5, -0.8}, {0.0, 0.7}}},
          {"Q", {{0.5, 0.0}, {0.0, 0.7}}},
          {"R", {{0.5, 0.1}, {0.1, 0.8}}},
          {"Sigma0", {{1.0, 0.0}, {0.0, 1.0}}}}},
        {"parameters", {{"delta_steps", 25}}},
        {"output_path", "example1_tradeoff.csv"},
        {"seed", static_cast<std::int64_t>(kDefaultSeed)},
    };
    return parse_config(document);
  }
  if (name == "vehicle") {
    const json document = {
        {"experiment", "sweep"},
        {"plant",
         {{"A", {{1.0, 1.0, 0.0, 0.0}, {0.0, 1.0, 0.0, 0.0}, {0.0, 0.0, 1.0, 1.0}, {0.0, 0.0, 0.0, 1.0}}},
          {"B", {{0.0, 0.0}, {1.0, 0.0}, {0.0, 0.0}, {0.0, 1.0}}},
          {"C", {{1.0, 0.0, 0.0, 0.0}, {0.0, 0.0, 1.0, 0.0}}},
          {"Q", {{0.1, 0.0, 0.0, 0.0}, {0.0, 0.1, 0.0, 0.0}, {0.0, 0.0, 0.1, 0.0}, {0.0, 0.0, 0.0, 0.1}}},
          {"R", {{0.1, 0.0}, {0.0, 0.1}}},
          {"Ts", 1.0}}},
        {"parameters",
         {{"kind", "rmse"},
          {"lambda_robust", 0.307},
          {"R_adverse", {{2.5, 0.0}, {0.0, 2.5}}},
          {"scale_min", 1.0},
          {"scale_max", 25.0},
          {"scale_steps", 10},
          {"horizon", 20000},
          {"trials", 20},
          {"Wx",
           {{100.0, 0.0, 0.0, 0.0},
            {0.0, 1e-3, 0.0, 0.0},
            {0.0, 0.0, 100.0, 0.0},
            {0.0, 0.0, 0.0, 1e-3}}},
          {"Wu", {{1e-3, 0.0}, {0.0, 1e-3}}},
          {"course",
           {{"width", 40.0},
            {"height", 20.0},
            {"corner_radius", 5.0},
            {"speed", 2.0},
            {"steps_per_waypoint", 5}}}}},
        {"output_path", "vehicle_rmse_sweep.csv"},
        {"seed", static_cast<std::int64_t>(kDefaultSeed)},
    };
    return parse_config(document);
  }
  throw ValidationError("unknown preset \"" + name + "\" (expected example1 or vehicle)");
}

}  // namespace pareto_filter
