#pragma once

#include <map>
#include <string>
#include <vector>

namespace dpfpca {

// Flat key-value config with [section] headers; keys are stored as
// "section.key". '#' starts a comment.
using Config = std::map<std::string, std::string>;

Config load_config(const std::string& path);
Config parse_config(const std::string& text);

std::string get_string(const Config& cfg, const std::string& key,
                       const std::string& fallback);
int get_int(const Config& cfg, const std::string& key, int fallback);
double get_double(const Config& cfg, const std::string& key, double fallback);
std::vector<double> get_double_list(const Config& cfg, const std::string& key,
                                    const std::vector<double>& fallback);
std::vector<int> get_int_list(const Config& cfg, const std::string& key,
                              const std::vector<int>& fallback);

}  // namespace dpfpca
