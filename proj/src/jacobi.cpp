#include "hypegt/jacobi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hypegt/errors.hpp"

namespace hypegt {

namespace {

double off_diagonal_norm(const Tensor& a) {
    double s = 0.0;
    for (std::size_t p = 0; p < a.rows(); ++p)
        for (std::size_t q = 0; q < a.cols(); ++q)
            if (p != q) s += a.at(p, q) * a.at(p, q);
    return std::sqrt(s);
}

}  // namespace

EighResult jacobi_eigh(const Tensor& input, double tol, std::size_t max_sweeps) {
    std::size_t n = input.rows();
    if (n == 0 || input.cols() != n) {
        throw DimensionError("jacobi_eigh: matrix must be square and non-empty");
    }
    double scale = 0.0;
    for (double v : input.data) scale = std::max(scale, std::abs(v));
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = p + 1; q < n; ++q)
            if (std::abs(input.at(p, q) - input.at(q, p)) > 1e-12 * std::max(1.0, scale)) {
                throw ContractError("jacobi_eigh: matrix is not symmetric");
            }

    Tensor a(n, n, input.data);
    Tensor v = Tensor::identity(n);
    double threshold = tol * std::max(1.0, scale);

    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        if (off_diagonal_norm(a) <= threshold) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a.at(p, q);
                if (std::abs(apq) <= threshold / (static_cast<double>(n) * n)) continue;
                double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                double tau = s / (1.0 + c);

                double app = a.at(p, p);
                double aqq = a.at(q, q);
                a.at(p, p) = app - t * apq;
                a.at(q, q) = aqq + t * apq;
                a.at(p, q) = 0.0;
                a.at(q, p) = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (i == p || i == q) continue;
                    double aip = a.at(i, p);
                    double aiq = a.at(i, q);
                    a.at(i, p) = aip - s * (aiq + tau * aip);
                    a.at(p, i) = a.at(i, p);
                    a.at(i, q) = aiq + s * (aip - tau * aiq);
                    a.at(q, i) = a.at(i, q);
                }
                for (std::size_t i = 0; i < n; ++i) {
                    double vip = v.at(i, p);
                    double viq = v.at(i, q);
                    v.at(i, p) = vip - s * (viq + tau * vip);
                    v.at(i, q) = viq + s * (vip - tau * viq);
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return a.at(i, i) < a.at(j, j);
    });

    EighResult result;
    result.eigenvalues.resize(n);
    result.eigenvectors = Tensor(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        result.eigenvalues[j] = a.at(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i)
            result.eigenvectors.at(i, j) = v.at(i, order[j]);
    }
    return result;
}

}  // namespace hypegt
