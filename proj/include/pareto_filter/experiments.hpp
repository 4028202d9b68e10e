#pragma once

#include <string>
#include <vector>

#include "pareto_filter/config.hpp"
#include "pareto_filter/csv_io.hpp"

namespace pareto_filter {

inline constexpr const char* kToolVersion = "0.1.0";

// CLI exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitParseError = 2;
inline constexpr int kExitValidationError = 3;
inline constexpr int kExitSolverError = 4;

/// Runs the configured experiment and returns the result table (also written
/// to cfg.output_path with a provenance header unless the path is empty).
CsvTable run_experiment(const ExperimentConfig& cfg);

/// Provenance comment line recorded at the top of every output file.
std::string provenance_comment(const ExperimentConfig& cfg);

// Full command-line entry point: flag parsing, config/preset loading,
// overrides, error-to-exit-code mapping. Failures print a machine-readable
// JSON error record to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pareto_filter
