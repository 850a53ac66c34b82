#include "ksinv/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "ksinv/config.hpp"
#include "ksinv/errors.hpp"

namespace ksinv {

namespace {

double parse_cell(const std::string& text, const char* where) {
  errno = 0;
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0' || errno == ERANGE)
    throw io_error(std::string(where) + ": `" + text + "` is not a number");
  return value;
}

}  // namespace

int csv_table::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

std::string csv_serialize(const csv_table& table) {
  std::ostringstream out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out << ',';
    out << table.columns[i];
  }
  out << '\n';
  char buffer[64];
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size())
      throw io_error("csv row width does not match the header");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      std::snprintf(buffer, sizeof(buffer), "%.17g", row[i]);
      out << buffer;
    }
    out << '\n';
  }
  return out.str();
}

csv_table csv_parse(const std::string& text) {
  csv_table table;
  std::istringstream stream(text);
  std::string line;
  bool have_header = false;
  while (std::getline(stream, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!have_header) {
      table.columns = cells;
      have_header = true;
      continue;
    }
    if (cells.size() != table.columns.size())
      throw io_error("csv row has " + std::to_string(cells.size()) + " cells, expected " +
                     std::to_string(table.columns.size()));
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& cell : cells) row.push_back(parse_cell(cell, "csv cell"));
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw io_error("csv text has no header row");
  return table;
}

void csv_write(const std::string& path, const csv_table& table) {
  write_text_file(path, csv_serialize(table));
}

csv_table csv_read(const std::string& path) { return csv_parse(read_text_file(path)); }

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw io_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open for reading: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

namespace {

// Doubles cross JSON as %.17g strings so every bit survives the round trip
// regardless of the JSON library's float printing.
nlohmann::json number_array(const std::vector<double>& values) {
  nlohmann::json out = nlohmann::json::array();
  char buffer[64];
  for (double v : values) {
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    out.push_back(std::string(buffer));
  }
  return out;
}

std::vector<double> read_number_array(const nlohmann::json& node, const char* where) {
  if (!node.is_array()) throw io_error(std::string(where) + ": expected an array");
  std::vector<double> out;
  out.reserve(node.size());
  for (const auto& cell : node) {
    if (cell.is_string())
      out.push_back(parse_cell(cell.get<std::string>(), where));
    else if (cell.is_number())
      out.push_back(cell.get<double>());
    else
      throw io_error(std::string(where) + ": expected numbers");
  }
  return out;
}

}  // namespace

std::string trace_to_json(const density_trace& trace) {
  trace.check_consistent();
  nlohmann::json doc;
  doc["format"] = "ksinv.trace.v1";
  doc["sites"] = trace.sites;
  doc["electrons"] = trace.electrons;
  doc["times"] = number_array(trace.times);
  nlohmann::json values = nlohmann::json::array();
  for (const auto& v : trace.values)
    values.push_back(number_array(std::vector<double>(v.data(), v.data() + v.size())));
  doc["values"] = std::move(values);
  if (trace.noise) {
    doc["noise"]["delta_n"] = format_double(trace.noise->delta_n);
    doc["noise"]["seed"] = trace.noise->seed;
    doc["noise"]["repetitions"] = trace.noise->repetitions;
  }
  if (trace.curvature_bound_estimate) {
    doc["curvature_bound_estimate"] = format_double(*trace.curvature_bound_estimate);
    doc["curvature_bound_is_heuristic"] = true;
  }
  return doc.dump(2) + "\n";
}

density_trace trace_from_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw io_error(std::string("trace json: ") + e.what());
  }
  try {
    if (doc.value("format", std::string()) != "ksinv.trace.v1")
      throw io_error("trace json: unknown or missing format tag");
    density_trace trace;
    trace.sites = doc.at("sites").get<int>();
    trace.electrons = doc.at("electrons").get<int>();
    trace.times = read_number_array(doc.at("times"), "trace times");
    for (const auto& row : doc.at("values")) {
      const std::vector<double> cells = read_number_array(row, "trace values");
      trace.values.push_back(
          Eigen::Map<const Eigen::VectorXd>(cells.data(), static_cast<long>(cells.size())));
    }
    if (doc.contains("noise")) {
      noise_spec spec;
      spec.delta_n = parse_cell(doc["noise"].at("delta_n").get<std::string>(), "noise delta_n");
      spec.seed = doc["noise"].at("seed").get<std::uint64_t>();
      spec.repetitions = doc["noise"].at("repetitions").get<long>();
      trace.noise = spec;
    }
    if (doc.contains("curvature_bound_estimate"))
      trace.curvature_bound_estimate =
          parse_cell(doc["curvature_bound_estimate"].get<std::string>(), "curvature bound");
    trace.check_consistent();
    return trace;
  } catch (const nlohmann::json::exception& e) {
    throw io_error(std::string("trace json: ") + e.what());
  }
}

csv_table trace_to_csv(const density_trace& trace) {
  trace.check_consistent();
  csv_table table;
  table.columns.push_back("t");
  for (int j = 0; j < trace.sites; ++j) table.columns.push_back("n_" + std::to_string(j + 1));
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    std::vector<double> row;
    row.reserve(1 + static_cast<std::size_t>(trace.sites));
    row.push_back(trace.times[i]);
    for (int j = 0; j < trace.sites; ++j) row.push_back(trace.values[i](j));
    table.rows.push_back(std::move(row));
  }
  return table;
}

density_trace trace_from_csv(const csv_table& table) {
  if (table.columns.empty() || table.columns.front() != "t")
    throw io_error("trace csv: first column must be `t`");
  density_trace trace;
  trace.sites = static_cast<int>(table.columns.size()) - 1;
  for (const auto& row : table.rows) {
    trace.times.push_back(row.front());
    trace.values.push_back(Eigen::Map<const Eigen::VectorXd>(row.data() + 1, trace.sites));
  }
  trace.check_consistent();
  return trace;
}

}  // namespace ksinv
