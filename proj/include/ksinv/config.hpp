#pragma once

#include <map>
#include <string>
#include <vector>

namespace ksinv {

// Flat key-value store with dotted hierarchical keys ("march.dt = 0.0025").
// Text format: one `key = value` pair per line, `#` starts a comment, blank
// lines ignored.  Values keep their raw text; typed access parses on demand.
// serialize() emits sorted keys with canonical number formatting, so
// parse(serialize(parse(text))) is identical to parse(text).
class config_map {
 public:
  static config_map parse(const std::string& text);
  static config_map load(const std::string& path);
  std::string serialize() const;

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
  void set_double(const std::string& key, double value);
  void set_long(const std::string& key, long long value);
  void set_bool(const std::string& key, bool value);

  // Typed getters throw config_error naming the key on parse failure.
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_long(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;  // space/comma separated

  const std::map<std::string, std::string>& entries() const { return entries_; }
  std::vector<std::string> keys() const;

  // Applies "key=value" override strings (CLI flags).
  void apply_override(const std::string& assignment);

 private:
  std::map<std::string, std::string> entries_;
};

// Canonical floating-point text: round-trips the exact double.
std::string format_double(double value);

}  // namespace ksinv
