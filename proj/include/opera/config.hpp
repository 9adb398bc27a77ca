#ifndef OPERA_CONFIG_HPP
#define OPERA_CONFIG_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include "opera/common.hpp"

namespace opera {

// Flat key = value configuration, one entry per line, '#' comments, lists
// comma-separated. Reads are tracked so unknown keys can be rejected.
class Config {
 public:
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  void set(const std::string& key, const std::string& value);  // CLI overrides

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;  // accepts fractions like 2/3
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key) const;
  long get_int(const std::string& key, long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<long> get_ints(const std::string& key) const;
  std::vector<std::string> get_strings(const std::string& key) const;

  // Throws config_error naming any key that was never read.
  void reject_unknown_keys() const;

  std::string digest() const;  // stable hash over sorted key=value pairs

  static double parse_number(const std::string& text);  // fraction-aware
  static std::vector<std::string> split(const std::string& text, char sep);

 private:
  const std::string& raw(const std::string& key) const;

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> consumed_;
};

}  // namespace opera

#endif  // OPERA_CONFIG_HPP
