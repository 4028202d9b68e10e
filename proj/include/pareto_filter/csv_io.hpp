#pragma once

#include <string>
#include <vector>

#include "pareto_filter/closed_loop.hpp"
#include "pareto_filter/matrix_equations.hpp"

namespace pareto_filter {

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

// Writes a table with an optional leading "# ..." comment line. Values are
// printed with enough digits to re-parse to the identical double.
void write_csv(const std::string& path, const CsvTable& table,
               const std::string& comment = "");

/// Reads a numeric CSV, skipping blank lines and "#" comments. A non-numeric
/// first row is taken as the header.
CsvTable read_csv(const std::string& path);

/// One sample vector per row; all rows must share one width.
std::vector<VectorXd> read_sample_rows(const std::string& path);

/// Waypoint rows (t, x, y, ...): integer step then one value per axis.
std::vector<TimedWaypoint> read_waypoints(const std::string& path);

/// Shortest decimal round-trip representation of a double.
std::string format_double(double value);

}  // namespace pareto_filter
