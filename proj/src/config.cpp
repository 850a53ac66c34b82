#include "ksinv/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ksinv/errors.hpp"

namespace ksinv {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  // Prefer the shortest representation that still round-trips exactly.
  for (int precision = 1; precision < 17; ++precision) {
    char probe[64];
    std::snprintf(probe, sizeof(probe), "%.*g", precision, value);
    if (std::strtod(probe, nullptr) == value) return probe;
  }
  return buffer;
}

config_map config_map::parse(const std::string& text) {
  config_map out;
  std::istringstream stream(text);
  std::string line;
  long line_number = 0;
  while (std::getline(stream, line)) {
    ++line_number;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos)
      throw config_error("config line " + std::to_string(line_number) +
                         ": expected `key = value`, got `" + body + "`");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty())
      throw config_error("config line " + std::to_string(line_number) + ": empty key");
    out.entries_[key] = value;
  }
  return out;
}

config_map config_map::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::string config_map::serialize() const {
  std::ostringstream out;
  for (const auto& [key, value] : entries_) out << key << " = " << value << "\n";
  return out.str();
}

bool config_map::has(const std::string& key) const { return entries_.count(key) != 0; }

void config_map::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

void config_map::set_double(const std::string& key, double value) {
  entries_[key] = format_double(value);
}

void config_map::set_long(const std::string& key, long long value) {
  entries_[key] = std::to_string(value);
}

void config_map::set_bool(const std::string& key, bool value) {
  entries_[key] = value ? "true" : "false";
}

std::string config_map::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double config_map::get_double(const std::string& key, double fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  errno = 0;
  char* end = nullptr;
  const double value = std::strtod(it->second.c_str(), &end);
  if (end == it->second.c_str() || *end != '\0' || errno == ERANGE)
    throw config_error("config key `" + key + "`: `" + it->second + "` is not a number");
  return value;
}

long long config_map::get_long(const std::string& key, long long fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  errno = 0;
  char* end = nullptr;
  const long long value = std::strtoll(it->second.c_str(), &end, 10);
  if (end == it->second.c_str() || *end != '\0' || errno == ERANGE)
    throw config_error("config key `" + key + "`: `" + it->second + "` is not an integer");
  return value;
}

bool config_map::get_bool(const std::string& key, bool fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw config_error("config key `" + key + "`: `" + v + "` is not a boolean");
}

std::vector<double> config_map::get_doubles(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return {};
  std::string text = it->second;
  for (char& c : text)
    if (c == ',') c = ' ';
  std::vector<double> values;
  std::istringstream stream(text);
  std::string token;
  while (stream >> token) {
    errno = 0;
    char* end = nullptr;
    const double value = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0' || errno == ERANGE)
      throw config_error("config key `" + key + "`: `" + token + "` is not a number");
    values.push_back(value);
  }
  return values;
}

std::vector<std::string> config_map::keys() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [key, value] : entries_) out.push_back(key);
  return out;
}

void config_map::apply_override(const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw config_error("override `" + assignment + "`: expected key=value");
  const std::string key = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  if (key.empty()) throw config_error("override `" + assignment + "`: empty key");
  entries_[key] = value;
}

}  // namespace ksinv
