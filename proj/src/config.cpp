#include "twttsim/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace twtt {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

ConfigMap parse_config_text(const std::string& text) {
    ConfigMap cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
        cfg[key] = value;
    }
    return cfg;
}

ConfigMap load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config_text(text.str());
}

double config_double(const ConfigMap& cfg, const std::string& key, double fallback) {
    auto it = cfg.find(key);
    if (it == cfg.end()) return fallback;
    try {
        std::size_t used = 0;
        const double v = std::stod(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key " + key + ": not a number: " + it->second);
    }
}

std::uint64_t config_u64(const ConfigMap& cfg, const std::string& key, std::uint64_t fallback) {
    auto it = cfg.find(key);
    if (it == cfg.end()) return fallback;
    try {
        std::size_t used = 0;
        const auto v = std::stoull(it->second, &used, 0);
        if (used != it->second.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key " + key + ": not an integer: " + it->second);
    }
}

bool config_bool(const ConfigMap& cfg, const std::string& key, bool fallback) {
    auto it = cfg.find(key);
    if (it == cfg.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw std::invalid_argument("config key " + key + ": not a boolean: " + it->second);
}

std::string config_string(const ConfigMap& cfg, const std::string& key, std::string fallback) {
    auto it = cfg.find(key);
    return it == cfg.end() ? fallback : it->second;
}

std::vector<double> config_list(const ConfigMap& cfg, const std::string& key,
                                std::vector<double> fallback) {
    auto it = cfg.find(key);
    if (it == cfg.end()) return fallback;
    std::vector<double> out;
    std::istringstream in(it->second);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw std::invalid_argument("config key " + key + ": bad list element: " + item);
        }
    }
    if (out.empty()) throw std::invalid_argument("config key " + key + ": empty list");
    return out;
}

}  // namespace twtt
