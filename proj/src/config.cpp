#include "pareto_filter/config.hpp"

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>

#include "pareto_filter/csv_io.hpp"

namespace pareto_filter {

using nlohmann::json;

namespace {

void check_keys(const json& object, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = object.begin(); it != object.end(); ++it) {
    bool known = false;
    for (const char* key : allowed)
      if (it.key() == key) {
        known = true;
        break;
      }
    if (!known)
      throw ValidationError(path + ": unknown key \"" + it.key() + "\"");
  }
}

double require_number(const json& value, const std::string& path) {
  if (!value.is_number()) throw ValidationError(path + ": expected a number");
  return value.get<double>();
}

int require_int(const json& value, const std::string& path) {
  if (!value.is_number_integer()) throw ValidationError(path + ": expected an integer");
  return value.get<int>();
}

std::string require_string(const json& value, const std::string& path) {
  if (!value.is_string()) throw ValidationError(path + ": expected a string");
  return value.get<std::string>();
}

VectorXd parse_vector(const json& value, const std::string& path) {
  if (!value.is_array()) throw ValidationError(path + ": expected an array of numbers");
  VectorXd v(value.size());
  for (std::size_t i = 0; i < value.size(); ++i) {
    if (!value[i].is_number())
      throw ValidationError(path + "[" + std::to_string(i) + "]: expected a number");
    v(static_cast<Eigen::Index>(i)) = value[i].get<double>();
  }
  return v;
}

}  // namespace

MatrixXd parse_matrix(const json& value, const std::string& path) {
  if (!value.is_array() || value.empty())
    throw ValidationError(path + ": expected a non-empty array of rows");
  const std::size_t cols = value[0].is_array() ? value[0].size() : 0;
  if (cols == 0) throw ValidationError(path + "[0]: expected a non-empty row");
  MatrixXd m(value.size(), cols);
  for (std::size_t r = 0; r < value.size(); ++r) {
    const std::string row_path = path + "[" + std::to_string(r) + "]";
    if (!value[r].is_array())
      throw ValidationError(row_path + ": expected an array of numbers");
    if (value[r].size() != cols)
      throw ValidationError(row_path + ": has " + std::to_string(value[r].size()) +
                            " entries, expected " + std::to_string(cols));
    for (std::size_t c = 0; c < cols; ++c) {
      if (!value[r][c].is_number())
        throw ValidationError(row_path + "[" + std::to_string(c) + "]: expected a number");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          value[r][c].get<double>();
    }
  }
  return m;
}

NoiseModel parse_noise_model(const json& value, const std::string& path,
                             const std::string& base_dir) {
  if (!value.is_object()) throw ValidationError(path + ": expected a noise model object");
  const std::string kind = require_string(value.value("kind", json()), path + ".kind");
  if (kind == "gaussian") {
    check_keys(value, path, {"kind", "cov"});
    if (!value.contains("cov")) throw ValidationError(path + ".cov: required");
    return NoiseModel::gaussian(parse_matrix(value["cov"], path + ".cov"));
  }
  if (kind == "mixture") {
    check_keys(value, path, {"kind", "components"});
    if (!value.contains("components") || !value["components"].is_array())
      throw ValidationError(path + ".components: expected an array");
    std::vector<NoiseModel::MixtureComponent> components;
    for (std::size_t i = 0; i < value["components"].size(); ++i) {
      const json& c = value["components"][i];
      const std::string cpath = path + ".components[" + std::to_string(i) + "]";
      if (!c.is_object()) throw ValidationError(cpath + ": expected an object");
      check_keys(c, cpath, {"weight", "mean", "cov"});
      for (const char* key : {"weight", "mean", "cov"})
        if (!c.contains(key))
          throw ValidationError(cpath + "." + key + ": required");
      components.push_back(NoiseModel::MixtureComponent{
          require_number(c["weight"], cpath + ".weight"),
          parse_vector(c["mean"], cpath + ".mean"),
          parse_matrix(c["cov"], cpath + ".cov")});
    }
    return NoiseModel::mixture(components);
  }
  if (kind == "empirical") {
    check_keys(value, path, {"kind", "path"});
    if (!value.contains("path")) throw ValidationError(path + ".path: required");
    const std::filesystem::path file =
        std::filesystem::path(base_dir) / require_string(value["path"], path + ".path");
    return NoiseModel::empirical(read_sample_rows(file.string()));
  }
  throw ValidationError(path + ".kind: expected gaussian, mixture, or empirical, got \"" +
                        kind + "\"");
}

namespace {

SystemModel parse_system_block(const json& block, const std::string& path) {
  if (!block.is_object()) throw ValidationError(path + ": expected an object");
  check_keys(block, path, {"A", "C", "Q", "R", "Sigma0"});
  for (const char* key : {"A", "C", "Q", "R"})
    if (!block.contains(key)) throw ValidationError(path + "." + key + ": required");
  const MatrixXd A = parse_matrix(block["A"], path + ".A");
  const MatrixXd C = parse_matrix(block["C"], path + ".C");
  const MatrixXd Q = parse_matrix(block["Q"], path + ".Q");
  const MatrixXd R = parse_matrix(block["R"], path + ".R");
  const MatrixXd Sigma0 = block.contains("Sigma0")
                              ? parse_matrix(block["Sigma0"], path + ".Sigma0")
                              : MatrixXd(MatrixXd::Zero(A.rows(), A.cols()));
  try {
    return SystemModel(A, C, Q, R, Sigma0);
  } catch (const DimensionError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

PlantWithInput parse_plant_block(const json& block, const std::string& path) {
  if (!block.is_object()) throw ValidationError(path + ": expected an object");
  check_keys(block, path, {"A", "B", "C", "Q", "R", "Sigma0", "Ts"});
  for (const char* key : {"A", "B", "C", "Q", "R"})
    if (!block.contains(key)) throw ValidationError(path + "." + key + ": required");
  PlantWithInput plant;
  plant.A = parse_matrix(block["A"], path + ".A");
  plant.B = parse_matrix(block["B"], path + ".B");
  plant.C = parse_matrix(block["C"], path + ".C");
  plant.Q = parse_matrix(block["Q"], path + ".Q");
  plant.R = parse_matrix(block["R"], path + ".R");
  plant.Sigma0 = block.contains("Sigma0")
                     ? parse_matrix(block["Sigma0"], path + ".Sigma0")
                     : MatrixXd(MatrixXd::Zero(plant.A.rows(), plant.A.cols()));
  plant.Ts = block.contains("Ts") ? require_number(block["Ts"], path + ".Ts") : 1.0;
  try {
    plant.validate();
  } catch (const DimensionError& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return plant;
}

const std::set<std::string> kExperiments = {"tradeoff", "design", "simulate", "sweep",
                                            "closedloop-tradeoff"};

void validate_parameters(const std::string& experiment, const json& params,
                         const ExperimentConfig& cfg) {
  const std::string path = "parameters";
  if (!params.is_object()) throw ValidationError(path + ": expected an object");

  if (experiment == "tradeoff") {
    check_keys(params, path, {"delta_min", "delta_max", "delta_steps"});
  } else if (experiment == "design") {
    check_keys(params, path, {"lambda", "gamma"});
    const bool has_lambda = params.contains("lambda");
    const bool has_gamma = params.contains("gamma");
    if (has_lambda == has_gamma)
      throw ValidationError(path + ": exactly one of lambda or gamma is required");
  } else if (experiment == "simulate") {
    check_keys(params, path,
               {"horizon", "burn_in", "trials", "gain", "v_noise", "w_noise"});
  } else if (experiment == "sweep") {
    if (!params.contains("kind"))
      throw ValidationError(path + ".kind: required (rmse or estimator)");
    const std::string kind = require_string(params["kind"], path + ".kind");
    if (kind == "rmse") {
      check_keys(params, path,
                 {"kind", "lambda_robust", "R_adverse", "scale_min", "scale_max",
                  "scale_steps", "horizon", "trials", "Wx", "Wu", "course",
                  "waypoints_path"});
    } else if (kind == "estimator") {
      check_keys(params, path,
                 {"kind", "delta_multipliers", "delta_values", "v_nominal", "v_adverse",
                  "horizon", "trials", "burn_in"});
      if (!params.contains("v_nominal") || !params.contains("v_adverse"))
        throw ValidationError(path + ": estimator sweep requires v_nominal and v_adverse");
    } else {
      throw ValidationError(path + ".kind: expected rmse or estimator, got \"" + kind + "\"");
    }
  } else if (experiment == "closedloop-tradeoff") {
    check_keys(params, path,
               {"Wx", "Wu", "delta_multipliers", "delta_values", "mode", "multistarts"});
  }

  const bool is_rmse_sweep = experiment == "sweep" && params["kind"] == "rmse";
  const bool needs_plant = experiment == "closedloop-tradeoff" || is_rmse_sweep;
  if (needs_plant && !cfg.plant)
    throw ValidationError(experiment + ": requires a plant block");
  if (experiment == "sweep" && !cfg.plant && !cfg.system)
    throw ValidationError("sweep: requires a plant or system block");
  if ((experiment == "tradeoff" || experiment == "design" || experiment == "simulate") &&
      !cfg.system)
    throw ValidationError(experiment + ": requires a system block");
}

}  // namespace

ExperimentConfig parse_config(const json& document, const std::string& base_dir) {
  if (!document.is_object()) throw ValidationError("config: expected a JSON object");
  check_keys(document, "config",
             {"experiment", "system", "plant", "parameters", "output_path", "seed"});
  if (!document.contains("experiment"))
    throw ValidationError("config.experiment: required");

  ExperimentConfig cfg;
  cfg.document = document;
  cfg.base_dir = base_dir;
  cfg.experiment = require_string(document["experiment"], "config.experiment");
  if (!kExperiments.contains(cfg.experiment))
    throw ValidationError("config.experiment: unknown experiment \"" + cfg.experiment + "\"");

  if (document.contains("system") && document.contains("plant"))
    throw ValidationError("config: system and plant blocks are mutually exclusive");
  if (document.contains("system"))
    cfg.system = parse_system_block(document["system"], "system");
  if (document.contains("plant"))
    cfg.plant = parse_plant_block(document["plant"], "plant");

  cfg.parameters = document.value("parameters", json::object());
  cfg.output_path = document.contains("output_path")
                        ? require_string(document["output_path"], "config.output_path")
                        : std::string();
  if (document.contains("seed")) {
    const int seed = require_int(document["seed"], "config.seed");
    if (seed < 0) throw ValidationError("config.seed: must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(seed);
  } else {
    cfg.seed = kDefaultSeed;
  }

  validate_parameters(cfg.experiment, cfg.parameters, cfg);
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open config file: " + path);
  json document = json::parse(in);  // parse_error propagates
  return parse_config(document, std::filesystem::path(path).parent_path().string());
}

std::uint64_t config_hash(const json& document) {
  const std::string dump = document.dump();
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (unsigned char ch : dump) {
    hash ^= ch;
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

}  // namespace pareto_filter
