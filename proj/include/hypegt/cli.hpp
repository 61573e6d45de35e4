#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hypegt {

// Command-line entry point. Returns 0 on success, 1 when a verification
// property fails, 2 on usage, configuration or I/O errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hypegt
