#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "pareto_filter/closed_loop.hpp"
#include "pareto_filter/filter_design.hpp"
#include "pareto_filter/noise_model.hpp"

namespace pareto_filter {

// Validated experiment description. `document` holds the effective JSON
// (after CLI overrides); it is the provenance-hash input.
struct ExperimentConfig {
  std::string experiment;  // tradeoff | design | simulate | sweep | closedloop-tradeoff
  std::optional<SystemModel> system;
  std::optional<PlantWithInput> plant;
  nlohmann::json parameters;
  std::string output_path;
  std::uint64_t seed = 0;
  std::string base_dir;  // directory for relative file references
  nlohmann::json document;
};

inline constexpr std::uint64_t kDefaultSeed = 12345;

/// Parses and validates a config document. Unknown keys, malformed matrices
/// and wrong experiment/parameter combinations raise ValidationError with the
/// offending field path.
ExperimentConfig parse_config(const nlohmann::json& document,
                              const std::string& base_dir = ".");

/// Reads the file and parses it; JSON syntax errors propagate as
/// nlohmann::json::parse_error.
ExperimentConfig load_config_file(const std::string& path);

/// Matrix from an array of equal-length numeric rows.
MatrixXd parse_matrix(const nlohmann::json& value, const std::string& path);

/// Noise model from {"kind": "gaussian"|"mixture"|"empirical", ...}.
NoiseModel parse_noise_model(const nlohmann::json& value, const std::string& path,
                             const std::string& base_dir);

/// FNV-1a hash of the canonical dump; recorded in output provenance.
std::uint64_t config_hash(const nlohmann::json& document);

}  // namespace pareto_filter
