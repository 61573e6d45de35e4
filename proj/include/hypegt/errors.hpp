#pragma once

#include <stdexcept>
#include <string>

namespace hypegt {

// Shape or dimension conformance failure.
struct DimensionError : std::invalid_argument {
    explicit DimensionError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Input outside an op's mathematical domain (arcosh, artanh, log, ...).
struct DomainError : std::domain_error {
    explicit DomainError(const std::string& msg) : std::domain_error(msg) {}
};

// API contract violation (non-scalar loss, empty mask, ...).
struct ContractError : std::logic_error {
    explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

// Point violates a manifold or tangent-space constraint.
struct ManifoldError : std::runtime_error {
    explicit ManifoldError(const std::string& msg) : std::runtime_error(msg) {}
};

// Graph has a node of degree zero where a positive degree is required.
struct DegenerateDegreeError : std::runtime_error {
    explicit DegenerateDegreeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration value or file.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Requested more spectral components than the graph supports.
struct RankError : std::runtime_error {
    explicit RankError(const std::string& msg) : std::runtime_error(msg) {}
};

// Graph is disconnected where connectivity is required.
struct ConnectivityError : std::runtime_error {
    explicit ConnectivityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Metric is undefined on the given inputs (e.g. single-class AUROC).
struct MetricError : std::runtime_error {
    explicit MetricError(const std::string& msg) : std::runtime_error(msg) {}
};

// File parsing / serialization failure.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace hypegt
