#include "dpfpca/config.hpp"

#include <fstream>
#include <sstream>

#include "dpfpca/errors.hpp"

namespace dpfpca {

namespace {
std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}
}  // namespace

Config parse_config(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError("config line " + std::to_string(line_no) +
                      ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw DataError("config line " + std::to_string(line_no) + ": empty key");
    }
    cfg[section.empty() ? key : section + "." + key] = value;
  }
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string get_string(const Config& cfg, const std::string& key,
                       const std::string& fallback) {
  auto it = cfg.find(key);
  return it == cfg.end() ? fallback : it->second;
}

int get_int(const Config& cfg, const std::string& key, int fallback) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    throw DataError("config key '" + key + "' is not an integer: " + it->second);
  }
}

double get_double(const Config& cfg, const std::string& key, double fallback) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw DataError("config key '" + key + "' is not a number: " + it->second);
  }
}

std::vector<double> get_double_list(const Config& cfg, const std::string& key,
                                    const std::vector<double>& fallback) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  std::vector<double> out;
  std::stringstream ss(it->second);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      out.push_back(std::stod(trim(cell)));
    } catch (const std::exception&) {
      throw DataError("config key '" + key + "' has a non-numeric entry: " + cell);
    }
  }
  if (out.empty()) throw DataError("config key '" + key + "' is an empty list");
  return out;
}

std::vector<int> get_int_list(const Config& cfg, const std::string& key,
                              const std::vector<int>& fallback) {
  std::vector<double> ds = get_double_list(
      cfg, key, std::vector<double>(fallback.begin(), fallback.end()));
  return std::vector<int>(ds.begin(), ds.end());
}

}  // namespace dpfpca
