#pragma once

#include <string>
#include <vector>

namespace hypegt {

// Shortest decimal rendering that round-trips to the same double.
std::string fmt_double(double v);

double parse_double(const std::string& s);
long parse_long(const std::string& s);

std::vector<std::string> split_ws(const std::string& line);
std::string trim(const std::string& s);

std::vector<std::string> read_lines(const std::string& path);

}  // namespace hypegt
