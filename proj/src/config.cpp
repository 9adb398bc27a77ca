#include "opera/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace opera {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

Config Config::from_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw config_error("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) throw config_error("config line " + std::to_string(lineno) + ": empty key");
    cfg.values_[key] = value;
  }
  return cfg;
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = trim(value); }

const std::string& Config::raw(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw config_error("missing config key '" + key + "'");
  consumed_.insert(key);
  return it->second;
}

std::string Config::get_string(const std::string& key) const { return raw(key); }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  if (!has(key)) return fallback;
  return raw(key);
}

double Config::parse_number(const std::string& text) {
  const std::string s = trim(text);
  const auto slash = s.find('/');
  try {
    if (slash != std::string::npos) {
      std::size_t p1 = 0, p2 = 0;
      const double num = std::stod(s.substr(0, slash), &p1);
      const double den = std::stod(s.substr(slash + 1), &p2);
      if (p1 != slash || p2 != s.size() - slash - 1 || den == 0.0)
        throw config_error("bad fraction '" + s + "'");
      return num / den;
    }
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw config_error("trailing characters in number '" + s + "'");
    return v;
  } catch (const config_error&) {
    throw;
  } catch (const std::exception&) {
    throw config_error("cannot parse number '" + s + "'");
  }
}

double Config::get_double(const std::string& key) const { return parse_number(raw(key)); }

double Config::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  return parse_number(raw(key));
}

long Config::get_int(const std::string& key) const {
  const double v = get_double(key);
  const long n = static_cast<long>(v);
  if (static_cast<double>(n) != v) throw config_error("config key '" + key + "' must be an integer");
  return n;
}

long Config::get_int(const std::string& key, long fallback) const {
  if (!has(key)) return fallback;
  return get_int(key);
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string s = raw(key);
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw config_error("config key '" + key + "' must be a nonnegative integer");
  }
}

std::vector<std::string> Config::split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split(raw(key), ',')) out.push_back(parse_number(item));
  return out;
}

std::vector<long> Config::get_ints(const std::string& key) const {
  std::vector<long> out;
  for (double v : get_doubles(key)) {
    const long n = static_cast<long>(v);
    if (static_cast<double>(n) != v) throw config_error("config key '" + key + "' must list integers");
    out.push_back(n);
  }
  return out;
}

std::vector<std::string> Config::get_strings(const std::string& key) const {
  return split(raw(key), ',');
}

void Config::reject_unknown_keys() const {
  std::string unknown;
  for (const auto& [key, value] : values_) {
    if (!consumed_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
  }
  if (!unknown.empty()) throw config_error("unknown config keys: " + unknown);
}

std::string Config::digest() const {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001B3ULL;
    }
  };
  for (const auto& [key, value] : values_) {
    mix(key);
    mix("=");
    mix(value);
    mix("\n");
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace opera
