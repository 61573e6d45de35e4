#pragma once

#include <cstddef>
#include <string>

#include "hypegt/tensor.hpp"

namespace hypegt {

// Both models are parameterized by a curvature magnitude c > 0 (the sectional
// curvature is -c). Hyperboloid points x satisfy <x,x>_M = -1/c with x_0 > 0,
// where <.,.>_M negates the first coordinate; Poincare ball points satisfy
// c |x|^2 < 1.
enum class ManifoldKind { Hyperboloid, PoincareBall };

struct ManifoldSpec {
    ManifoldKind kind = ManifoldKind::Hyperboloid;
    double c = 1.0;
};

void validate_spec(const ManifoldSpec& spec);
std::string manifold_name(ManifoldKind kind);
ManifoldKind manifold_from_name(const std::string& name);

// A batch of points on one manifold, one per row, in ambient coordinates.
struct HBatch {
    ManifoldSpec spec;
    Tensor points;

    std::size_t intrinsic_dim() const;
};

std::size_t ambient_dim(const ManifoldSpec& spec, std::size_t k);
std::size_t intrinsic_dim(const ManifoldSpec& spec, std::size_t ambient);

// Batch of origin points (hyperboloid: (1/sqrt(c), 0, ..., 0); ball: 0).
Tensor manifold_origin(const ManifoldSpec& spec, std::size_t k, std::size_t rows = 1);

// Row-wise Minkowski inner product of ambient hyperboloid coordinates.
Tensor minkowski_inner(const Tensor& x, const Tensor& y);

// Largest constraint violation over the batch (0 for a clean batch). For the
// ball this is max(0, c|x|^2 - 1); for the hyperboloid |<x,x>_M + 1/c|, or
// +inf when some x_0 <= 0.
double manifold_max_violation(const ManifoldSpec& spec, const Tensor& points);

void check_on_manifold(const ManifoldSpec& spec, const Tensor& points,
                       double tol = 1e-6);

// Lift a k-dim Euclidean vector into the tangent space at the origin
// (hyperboloid: prepend a zero coordinate; ball: identity).
Tensor tangent_project(const ManifoldSpec& spec, const Tensor& e);

// Inverse of tangent_project on tangent vectors at the origin.
Tensor tangent_spatial(const ManifoldSpec& spec, const Tensor& v);

// Exponential map at the origin. The hyperboloid form takes an ambient
// tangent vector (first coordinate zero); the ball form takes a k-dim vector.
Tensor exp_origin(const ManifoldSpec& spec, const Tensor& v);

// Logarithm map at the origin; returns ambient tangent coordinates.
Tensor log_origin(const ManifoldSpec& spec, const Tensor& x);

// Mobius addition on the Poincare ball (row-wise).
Tensor mobius_add(const ManifoldSpec& spec, const Tensor& x, const Tensor& y);

// Hyperboloid analogue realized through the origin tangent space:
// exp_o(log_o(x) + log_o(y)), re-projected.
Tensor hyperboloid_add(const ManifoldSpec& spec, const Tensor& x, const Tensor& y);

// Dispatch to mobius_add / hyperboloid_add.
Tensor manifold_add(const ManifoldSpec& spec, const Tensor& x, const Tensor& y);

// Re-project ambient coordinates onto the manifold. Hyperboloid: recompute
// x_0 from the spatial part; ball: radially rescale rows that reached the
// boundary. On-manifold points pass through unchanged.
Tensor manifold_project(const ManifoldSpec& spec, const Tensor& x);

}  // namespace hypegt
