#include "hypegt/manifold.hpp"

#include <cmath>
#include <limits>

#include "hypegt/errors.hpp"

namespace hypegt {

namespace {

// Regularizer added under square roots of squared norms so that the 0/0
// limit at the origin evaluates to exactly zero without branching.
constexpr double kNormEps = 1e-30;

// Rows whose ball radius reaches 1 - kBoundaryGate (in sqrt(c)-scaled units)
// are pulled inward before artanh; the rescale factor is treated as constant.
constexpr double kBoundaryGate = 1e-12;
constexpr double kBoundaryPull = 1e-11;

// Radius used by manifold_project when a row lies on or outside the ball.
constexpr double kProjectRadius = 1e-5;

Tensor regularized_norm(const Tensor& rows_norm) {
    // sqrt(|x|^2 + eps) built from the recorded norm, so gradients flow.
    return sqrt(add(mul_elementwise(rows_norm, rows_norm),
                    Tensor::full(rows_norm.rows(), 1, kNormEps)));
}

// Row-wise constant rescale; scales are treated as non-differentiable.
Tensor const_row_scale(const Tensor& x, const std::vector<double>& scales) {
    Tensor col(x.rows(), 1, std::vector<double>(scales));
    return mul_elementwise(x, broadcast_cols(col, x.cols()));
}

std::vector<double> plain_row_norms(const Tensor& x) {
    std::vector<double> norms(x.rows(), 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < x.cols(); ++c) s += x.at(r, c) * x.at(r, c);
        norms[r] = std::sqrt(s);
    }
    return norms;
}

}  // namespace

void validate_spec(const ManifoldSpec& spec) {
    if (!(spec.c > 0.0) || !std::isfinite(spec.c)) {
        throw ConfigError("manifold: curvature must be a positive finite magnitude");
    }
}

std::string manifold_name(ManifoldKind kind) {
    return kind == ManifoldKind::Hyperboloid ? "hyperboloid" : "poincare_ball";
}

ManifoldKind manifold_from_name(const std::string& name) {
    if (name == "hyperboloid") return ManifoldKind::Hyperboloid;
    if (name == "poincare_ball") return ManifoldKind::PoincareBall;
    throw ConfigError("manifold: unknown name '" + name + "'");
}

std::size_t HBatch::intrinsic_dim() const { return hypegt::intrinsic_dim(spec, points.cols()); }

std::size_t ambient_dim(const ManifoldSpec& spec, std::size_t k) {
    return spec.kind == ManifoldKind::Hyperboloid ? k + 1 : k;
}

std::size_t intrinsic_dim(const ManifoldSpec& spec, std::size_t ambient) {
    if (spec.kind == ManifoldKind::Hyperboloid) {
        if (ambient < 2) throw DimensionError("hyperboloid points need at least 2 coordinates");
        return ambient - 1;
    }
    if (ambient < 1) throw DimensionError("ball points need at least 1 coordinate");
    return ambient;
}

Tensor manifold_origin(const ManifoldSpec& spec, std::size_t k, std::size_t rows) {
    validate_spec(spec);
    if (spec.kind == ManifoldKind::Hyperboloid) {
        Tensor o(rows, k + 1);
        double x0 = 1.0 / std::sqrt(spec.c);
        for (std::size_t r = 0; r < rows; ++r) o.at(r, 0) = x0;
        return o;
    }
    return Tensor(rows, k);
}

Tensor minkowski_inner(const Tensor& x, const Tensor& y) {
    if (!x.same_shape(y)) {
        throw DimensionError("minkowski_inner: shape mismatch");
    }
    if (x.cols() < 2) throw DimensionError("minkowski_inner: need at least 2 coordinates");
    Tensor spatial = row_dot(slice_cols(x, 1, x.cols()), slice_cols(y, 1, y.cols()));
    Tensor time = mul_elementwise(slice_cols(x, 0, 1), slice_cols(y, 0, 1));
    return sub(spatial, time);
}

double manifold_max_violation(const ManifoldSpec& spec, const Tensor& points) {
    validate_spec(spec);
    double worst = 0.0;
    if (spec.kind == ManifoldKind::Hyperboloid) {
        if (points.cols() < 2) throw DimensionError("hyperboloid batch needs >= 2 columns");
        for (std::size_t r = 0; r < points.rows(); ++r) {
            if (!(points.at(r, 0) > 0.0)) return std::numeric_limits<double>::infinity();
            double inner = -points.at(r, 0) * points.at(r, 0);
            for (std::size_t c = 1; c < points.cols(); ++c)
                inner += points.at(r, c) * points.at(r, c);
            worst = std::max(worst, std::abs(inner + 1.0 / spec.c));
        }
        return worst;
    }
    for (std::size_t r = 0; r < points.rows(); ++r) {
        double sq = 0.0;
        for (std::size_t c = 0; c < points.cols(); ++c)
            sq += points.at(r, c) * points.at(r, c);
        worst = std::max(worst, std::max(0.0, spec.c * sq - 1.0));
    }
    return worst;
}

void check_on_manifold(const ManifoldSpec& spec, const Tensor& points, double tol) {
    double v = manifold_max_violation(spec, points);
    if (!(v <= tol)) {
        throw ManifoldError("point off " + manifold_name(spec.kind) +
                            " (violation " + std::to_string(v) + ", tol " +
                            std::to_string(tol) + ")");
    }
}

Tensor tangent_project(const ManifoldSpec& spec, const Tensor& e) {
    validate_spec(spec);
    if (spec.kind == ManifoldKind::PoincareBall) return e;
    return concat_cols(Tensor(e.rows(), 1), e);
}

Tensor tangent_spatial(const ManifoldSpec& spec, const Tensor& v) {
    if (spec.kind == ManifoldKind::PoincareBall) return v;
    if (v.cols() < 2) throw DimensionError("tangent_spatial: need >= 2 columns");
    return slice_cols(v, 1, v.cols());
}

Tensor exp_origin(const ManifoldSpec& spec, const Tensor& v) {
    validate_spec(spec);
    double sc = std::sqrt(spec.c);
    if (spec.kind == ManifoldKind::Hyperboloid) {
        if (v.cols() < 2) throw DimensionError("exp_origin: tangent needs >= 2 columns");
        for (std::size_t r = 0; r < v.rows(); ++r) {
            if (std::abs(v.at(r, 0)) > 1e-9) {
                throw ManifoldError("exp_origin: tangent vector has nonzero first "
                                    "coordinate " + std::to_string(v.at(r, 0)));
            }
        }
        Tensor spatial = slice_cols(v, 1, v.cols());
        Tensor r = row_l2_norm(spatial);
        Tensor scaled = scalar_mul(r, sc);
        Tensor x0 = scalar_mul(cosh(scaled), 1.0 / sc);
        Tensor factor = mul_elementwise(
            sinh(scaled), recip_pos(scalar_mul(regularized_norm(r), sc)));
        return concat_cols(x0, mul_elementwise(spatial, broadcast_cols(factor, spatial.cols())));
    }
    Tensor r = row_l2_norm(v);
    Tensor factor = mul_elementwise(
        tanh(scalar_mul(r, sc)), recip_pos(scalar_mul(regularized_norm(r), sc)));
    return mul_elementwise(v, broadcast_cols(factor, v.cols()));
}

Tensor log_origin(const ManifoldSpec& spec, const Tensor& x) {
    validate_spec(spec);
    check_on_manifold(spec, x);
    double sc = std::sqrt(spec.c);
    if (spec.kind == ManifoldKind::Hyperboloid) {
        Tensor spatial = slice_cols(x, 1, x.cols());
        Tensor s = row_l2_norm(spatial);
        Tensor ssq = mul_elementwise(s, s);
        // arcosh(sqrt(1 + c s^2)) equals arcosh(sqrt(c) x_0) but its argument
        // is structurally >= 1, exact at the origin.
        Tensor theta = arcosh(sqrt(add(scalar_mul(ssq, spec.c),
                                       Tensor::ones(s.rows(), 1))));
        Tensor factor = mul_elementwise(
            theta, recip_pos(scalar_mul(regularized_norm(s), sc)));
        return concat_cols(Tensor(x.rows(), 1),
                           mul_elementwise(spatial, broadcast_cols(factor, spatial.cols())));
    }
    // Rows at (or, within tolerance, past) the boundary are pulled strictly
    // inside so artanh stays in its domain; the pull factor is constant.
    std::vector<double> norms = plain_row_norms(x);
    std::vector<double> scales(x.rows(), 1.0);
    bool any = false;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        double u = sc * norms[r];
        if (u > 1.0 - kBoundaryGate) {
            scales[r] = (1.0 - kBoundaryPull) / u;
            any = true;
        }
    }
    Tensor xin = any ? const_row_scale(x, scales) : x;
    Tensor s = row_l2_norm(xin);
    Tensor factor = mul_elementwise(
        artanh(scalar_mul(s, sc)), recip_pos(scalar_mul(regularized_norm(s), sc)));
    return mul_elementwise(xin, broadcast_cols(factor, xin.cols()));
}

Tensor mobius_add(const ManifoldSpec& spec, const Tensor& x, const Tensor& y) {
    validate_spec(spec);
    if (spec.kind != ManifoldKind::PoincareBall) {
        throw ContractError("mobius_add: defined on the Poincare ball only");
    }
    if (!x.same_shape(y)) throw DimensionError("mobius_add: shape mismatch");
    check_on_manifold(spec, x);
    check_on_manifold(spec, y);
    double c = spec.c;
    Tensor xx = row_dot(x, x);
    Tensor yy = row_dot(y, y);
    Tensor xy = row_dot(x, y);
    Tensor ones = Tensor::ones(x.rows(), 1);
    // (1 + 2c<x,y> + c|y|^2) x + (1 - c|x|^2) y
    // -----------------------------------------
    //    1 + 2c<x,y> + c^2 |x|^2 |y|^2
    Tensor coef_x = add(add(ones, scalar_mul(xy, 2.0 * c)), scalar_mul(yy, c));
    Tensor coef_y = sub(ones, scalar_mul(xx, c));
    Tensor denom = add(add(ones, scalar_mul(xy, 2.0 * c)),
                       scalar_mul(mul_elementwise(xx, yy), c * c));
    Tensor numer = add(mul_elementwise(x, broadcast_cols(coef_x, x.cols())),
                       mul_elementwise(y, broadcast_cols(coef_y, y.cols())));
    Tensor out = mul_elementwise(numer, broadcast_cols(recip_pos(denom), x.cols()));
    return manifold_project(spec, out);
}

Tensor hyperboloid_add(const ManifoldSpec& spec, const Tensor& x, const Tensor& y) {
    validate_spec(spec);
    if (spec.kind != ManifoldKind::Hyperboloid) {
        throw ContractError("hyperboloid_add: defined on the hyperboloid only");
    }
    if (!x.same_shape(y)) throw DimensionError("hyperboloid_add: shape mismatch");
    Tensor t = add(log_origin(spec, x), log_origin(spec, y));
    return manifold_project(spec, exp_origin(spec, t));
}

Tensor manifold_add(const ManifoldSpec& spec, const Tensor& x, const Tensor& y) {
    return spec.kind == ManifoldKind::Hyperboloid ? hyperboloid_add(spec, x, y)
                                                  : mobius_add(spec, x, y);
}

Tensor manifold_project(const ManifoldSpec& spec, const Tensor& x) {
    validate_spec(spec);
    if (spec.kind == ManifoldKind::Hyperboloid) {
        if (x.cols() < 2) throw DimensionError("manifold_project: need >= 2 columns");
        Tensor spatial = slice_cols(x, 1, x.cols());
        Tensor s = row_l2_norm(spatial);
        Tensor x0 = sqrt(add(mul_elementwise(s, s),
                             Tensor::full(s.rows(), 1, 1.0 / spec.c)));
        return concat_cols(x0, spatial);
    }
    std::vector<double> norms = plain_row_norms(x);
    double sc = std::sqrt(spec.c);
    std::vector<double> scales(x.rows(), 1.0);
    bool any = false;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        if (sc * norms[r] >= 1.0) {
            scales[r] = (1.0 - kProjectRadius) / (sc * norms[r]);
            any = true;
        }
    }
    return any ? const_row_scale(x, scales) : x;
}

}  // namespace hypegt
