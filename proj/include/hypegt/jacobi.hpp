#pragma once

#include <vector>

#include "hypegt/tensor.hpp"

namespace hypegt {

struct EighResult {
    std::vector<double> eigenvalues;  // ascending
    Tensor eigenvectors;              // column j pairs with eigenvalue j
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Iterates full
// sweeps until the off-diagonal Frobenius norm falls below tol (relative to
// the matrix norm), then sorts eigenpairs ascending.
EighResult jacobi_eigh(const Tensor& a, double tol = 1e-12,
                       std::size_t max_sweeps = 128);

}  // namespace hypegt
