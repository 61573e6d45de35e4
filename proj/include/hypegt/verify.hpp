#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace hypegt {

// One measured invariant: pass when the measurement stays within tolerance.
struct PropertyResult {
    std::string name;
    double measured = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

std::vector<PropertyResult> verify_manifolds(std::uint64_t seed);
std::vector<PropertyResult> verify_pe(std::uint64_t seed);
std::vector<PropertyResult> verify_gradients(std::uint64_t seed);
std::vector<PropertyResult> verify_models(std::uint64_t seed);
std::vector<PropertyResult> verify_metrics(std::uint64_t seed);
std::vector<PropertyResult> verify_all(std::uint64_t seed);

bool all_pass(const std::vector<PropertyResult>& results);
std::string format_result(const PropertyResult& r);
void print_results(const std::vector<PropertyResult>& results, std::ostream& out);

}  // namespace hypegt
