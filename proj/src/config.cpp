#include "hypegt/config.hpp"

#include <sstream>

#include "hypegt/errors.hpp"
#include "hypegt/text.hpp"

namespace hypegt {

KVConfig KVConfig::from_lines(const std::vector<std::string>& lines) {
    KVConfig cfg;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string line = lines[i];
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(i + 1) +
                              ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(i + 1) + ": empty key");
        if (!cfg.values_.emplace(key, value).second)
            throw ConfigError("config: duplicate key " + key);
    }
    return cfg;
}

KVConfig KVConfig::from_string(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return from_lines(lines);
}

KVConfig KVConfig::from_file(const std::string& path) {
    return from_lines(read_lines(path));
}

bool KVConfig::has(const std::string& key) const { return values_.count(key) > 0; }

std::string KVConfig::get_string(const std::string& key,
                                 const std::string& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    consumed_.insert(key);
    return it->second;
}

std::string KVConfig::require_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("config: missing required key " + key);
    consumed_.insert(key);
    return it->second;
}

double KVConfig::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    consumed_.insert(key);
    try {
        return parse_double(it->second);
    } catch (const IoError&) {
        throw ConfigError("config: key " + key + " is not a number: " + it->second);
    }
}

long KVConfig::get_long(const std::string& key, long fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    consumed_.insert(key);
    try {
        return parse_long(it->second);
    } catch (const IoError&) {
        throw ConfigError("config: key " + key + " is not an integer: " + it->second);
    }
}

bool KVConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    consumed_.insert(key);
    if (it->second == "true") return true;
    if (it->second == "false") return false;
    throw ConfigError("config: key " + key + " must be true or false: " + it->second);
}

void KVConfig::ensure_consumed() const {
    for (const auto& [key, value] : values_)
        if (consumed_.count(key) == 0)
            throw ConfigError("config: unknown key " + key);
}

std::vector<std::string> KVConfig::keys() const {
    std::vector<std::string> out;
    for (const auto& [key, value] : values_) out.push_back(key);
    return out;
}

}  // namespace hypegt
