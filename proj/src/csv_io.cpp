#include "pareto_filter/csv_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace pareto_filter {

std::string format_double(double value) {
  char buffer[40];
  // Try the shortest representation that recovers the exact double.
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buffer, sizeof(buffer), "%.*g", precision, value);
    if (std::strtod(buffer, nullptr) == value) return buffer;
  }
  return buffer;
}

void write_csv(const std::string& path, const CsvTable& table,
               const std::string& comment) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("write_csv: cannot open " + path + " for writing");
  if (!comment.empty()) out << "# " << comment << "\n";
  for (std::size_t i = 0; i < table.columns.size(); ++i)
    out << (i ? "," : "") << table.columns[i];
  out << "\n";
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size())
      throw ValidationError("write_csv: row width does not match header");
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << format_double(row[i]);
    out << "\n";
  }
  if (!out.good()) throw ValidationError("write_csv: write failed for " + path);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

bool parse_double(const std::string& text, double* value) {
  const char* begin = text.c_str();
  char* end = nullptr;
  errno = 0;
  *value = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  return end != begin && end && *end == '\0' && errno == 0;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("read_csv: cannot open " + path);

  CsvTable table;
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const std::vector<std::string> fields = split_fields(line);
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t i = 0; i < fields.size(); ++i)
      if (!parse_double(fields[i], &row[i])) {
        numeric = false;
        break;
      }
    if (!numeric) {
      if (saw_header || !table.rows.empty())
        throw ValidationError("read_csv: non-numeric row in " + path + ": " + line);
      table.columns = fields;
      saw_header = true;
      continue;
    }
    if (!table.rows.empty() && row.size() != table.rows.front().size())
      throw ValidationError("read_csv: ragged row in " + path);
    table.rows.push_back(std::move(row));
  }
  if (!saw_header && !table.rows.empty())
    table.columns.assign(table.rows.front().size(), "");
  return table;
}

std::vector<VectorXd> read_sample_rows(const std::string& path) {
  const CsvTable table = read_csv(path);
  if (table.rows.empty()) throw ValidationError("read_sample_rows: no samples in " + path);
  std::vector<VectorXd> samples;
  samples.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    VectorXd v(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) v(static_cast<Eigen::Index>(i)) = row[i];
    samples.push_back(std::move(v));
  }
  return samples;
}

std::vector<TimedWaypoint> read_waypoints(const std::string& path) {
  const CsvTable table = read_csv(path);
  if (table.rows.empty()) throw ValidationError("read_waypoints: no waypoints in " + path);
  std::vector<TimedWaypoint> waypoints;
  waypoints.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    if (row.size() < 2) throw ValidationError("read_waypoints: rows need (t, position...)");
    TimedWaypoint wp;
    const double t = row[0];
    if (t != std::floor(t)) throw ValidationError("read_waypoints: step must be an integer");
    wp.step = static_cast<int>(t);
    wp.position = VectorXd(row.size() - 1);
    for (std::size_t i = 1; i < row.size(); ++i)
      wp.position(static_cast<Eigen::Index>(i - 1)) = row[i];
    waypoints.push_back(std::move(wp));
  }
  return waypoints;
}

}  // namespace pareto_filter
