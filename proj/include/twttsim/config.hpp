#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace twtt {

// Flat "section.key = value" text config. '#' starts a comment; blank lines
// are ignored.
using ConfigMap = std::map<std::string, std::string, std::less<>>;

ConfigMap parse_config_text(const std::string& text);
ConfigMap load_config_file(const std::string& path);

double config_double(const ConfigMap& cfg, const std::string& key, double fallback);
std::uint64_t config_u64(const ConfigMap& cfg, const std::string& key, std::uint64_t fallback);
bool config_bool(const ConfigMap& cfg, const std::string& key, bool fallback);
std::string config_string(const ConfigMap& cfg, const std::string& key, std::string fallback);

// Comma-separated numeric list; returns fallback when the key is absent.
std::vector<double> config_list(const ConfigMap& cfg, const std::string& key,
                                std::vector<double> fallback);

}  // namespace twtt
