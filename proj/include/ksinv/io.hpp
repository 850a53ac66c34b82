#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ksinv/oracle.hpp"

namespace ksinv {

// Numeric table with named columns; cells are written with enough digits
// (%.17g) that reading them back reproduces the exact doubles.
struct csv_table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column_index(const std::string& name) const;  // -1 when absent
};

std::string csv_serialize(const csv_table& table);
csv_table csv_parse(const std::string& text);
void csv_write(const std::string& path, const csv_table& table);
csv_table csv_read(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// Trace serialization.  JSON carries full metadata and round-trips every
// double bit-exactly; CSV is the tabular view (t, then one column per site).
std::string trace_to_json(const density_trace& trace);
density_trace trace_from_json(const std::string& json_text);
csv_table trace_to_csv(const density_trace& trace);
density_trace trace_from_csv(const csv_table& table);

}  // namespace ksinv
