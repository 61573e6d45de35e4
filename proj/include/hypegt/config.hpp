#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace hypegt {

// Flat key=value configuration. '#' starts a comment, blank lines are
// skipped, duplicate keys are rejected. Every stored key must be read before
// ensure_consumed(), so typos surface as errors instead of silent defaults.
class KVConfig {
public:
    static KVConfig from_lines(const std::vector<std::string>& lines);
    static KVConfig from_string(const std::string& text);
    static KVConfig from_file(const std::string& path);

    bool has(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::string require_string(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long get_long(const std::string& key, long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    void ensure_consumed() const;
    std::vector<std::string> keys() const;

private:
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> consumed_;
};

}  // namespace hypegt
