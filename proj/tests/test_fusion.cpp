#include <cmath>

#include "doctest.h"
#include "hypegt/fusion.hpp"
#include "hypegt/rng.hpp"

using namespace hypegt;

namespace {

Tensor random_features(Rng& rng, std::size_t n, std::size_t k, double scale = 1.0) {
    Tensor t(n, k);
    for (double& v : t.data) v = rng.normal(0.0, scale);
    return t;
}

HBatch random_points(Rng& rng, const ManifoldSpec& spec, std::size_t n, std::size_t k) {
    Tensor v = random_features(rng, n, k, 0.7);
    return HBatch{spec, exp_origin(spec, tangent_project(spec, v))};
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
    return worst;
}

}  // namespace

TEST_CASE("fusing with the origin is the identity") {
    Rng rng(81);
    for (ManifoldKind kind : {ManifoldKind::Hyperboloid, ManifoldKind::PoincareBall}) {
        for (double c : {0.5, 1.0, 2.0}) {
            ManifoldSpec spec{kind, c};
            Tensor x = random_features(rng, 8, 4);
            HBatch origin{spec, manifold_origin(spec, 4, 8)};
            CHECK(max_abs_diff(fuse_v1(x, origin), x) < 1e-8);
            CHECK(max_abs_diff(fuse_v2(x, origin), x) < 1e-12);
        }
    }
}

TEST_CASE("strategy 2 is a tangent-space shift") {
    Rng rng(82);
    ManifoldSpec spec{ManifoldKind::PoincareBall, 1.0};
    HBatch pe = random_points(rng, spec, 6, 3);
    Tensor x = random_features(rng, 6, 3);
    Tensor shift = tangent_spatial(spec, log_origin(spec, pe.points));
    Tensor expected = add(x, shift);
    CHECK(max_abs_diff(fuse_v2(x, pe), expected) == 0.0);

    // Linearity in x.
    Tensor y = random_features(rng, 6, 3);
    Tensor lhs = sub(fuse_v2(add(x, y), pe), fuse_v2(x, pe));
    CHECK(max_abs_diff(lhs, y) < 1e-12);
}

TEST_CASE("fusion validates inputs") {
    Rng rng(83);
    ManifoldSpec spec{ManifoldKind::Hyperboloid, 1.0};
    HBatch pe = random_points(rng, spec, 5, 3);
    CHECK_THROWS_AS(fuse_v1(Tensor(5, 4), pe), DimensionError);
    CHECK_THROWS_AS(fuse_v1(Tensor(6, 3), pe), DimensionError);
    CHECK_THROWS_AS(fuse_v2(Tensor(5, 4), pe), DimensionError);

    HBatch bad{spec, Tensor(5, 4)};  // zeros violate the hyperboloid constraint
    CHECK_THROWS_AS(fuse_v1(Tensor(5, 3), bad), ManifoldError);
}

TEST_CASE("fusion outputs stay finite for feature norms up to 3") {
    Rng rng(84);
    for (ManifoldKind kind : {ManifoldKind::Hyperboloid, ManifoldKind::PoincareBall}) {
        ManifoldSpec spec{kind, 1.0};
        HBatch pe = random_points(rng, spec, 40, 5);
        Tensor x = random_features(rng, 40, 5);
        // Scale rows to norm exactly 3.
        for (std::size_t r = 0; r < x.rows(); ++r) {
            double sq = 0.0;
            for (std::size_t c = 0; c < 5; ++c) sq += x.at(r, c) * x.at(r, c);
            double s = 3.0 / std::sqrt(sq);
            for (std::size_t c = 0; c < 5; ++c) x.at(r, c) *= s;
        }
        for (FuseStrategy strategy : {FuseStrategy::V1, FuseStrategy::V2}) {
            Tensor out = fuse(x, pe, strategy);
            for (double v : out.data) CHECK(std::isfinite(v));
        }
    }
}

TEST_CASE("injection is the same operation as fusion") {
    Rng rng(85);
    ManifoldSpec spec{ManifoldKind::PoincareBall, 2.0};
    HBatch pe = random_points(rng, spec, 7, 4);
    Tensor h = random_features(rng, 7, 4);
    CHECK(inject_deep(h, pe, FuseStrategy::V1).data == fuse_v1(h, pe).data);
    CHECK(inject_deep(h, pe, FuseStrategy::V2).data == fuse_v2(h, pe).data);
}

TEST_CASE("fusion gradient checks") {
    Rng rng(86);
    for (ManifoldKind kind : {ManifoldKind::Hyperboloid, ManifoldKind::PoincareBall}) {
        for (double c : {0.5, 2.0}) {
            ManifoldSpec spec{kind, c};
            HBatch pe = random_points(rng, spec, 4, 3);
            Tensor x = random_features(rng, 4, 3, 0.8);
            double e1 = grad_check(
                [&](const Tensor& t) { return sum(mul_elementwise(fuse_v1(t, pe), fuse_v1(t, pe))); },
                x);
            CHECK(e1 < 1e-6);
            double e2 = grad_check(
                [&](const Tensor& t) { return sum(mul_elementwise(fuse_v2(t, pe), fuse_v2(t, pe))); },
                x);
            CHECK(e2 < 1e-6);
        }
    }
}

TEST_CASE("adapter maps encodings between dimensions") {
    Rng rng(87);
    for (ManifoldKind kind : {ManifoldKind::Hyperboloid, ManifoldKind::PoincareBall}) {
        ManifoldSpec spec{kind, 1.0};
        HBatch pe = random_points(rng, spec, 6, 3);
        Tensor a = random_features(rng, 3, 5, 0.4);
        HBatch wide = adapt_pe(pe, a);
        CHECK(wide.intrinsic_dim() == 5);
        CHECK(wide.points.rows() == 6);
        CHECK(manifold_max_violation(wide.spec, wide.points) < 1e-10);

        Tensor x = random_features(rng, 6, 5);
        Tensor fused = fuse_v1(x, wide);
        CHECK(fused.cols() == 5);

        CHECK_THROWS_AS(adapt_pe(pe, Tensor(4, 5)), DimensionError);

        double err = grad_check(
            [&](const Tensor& t) { return sum(fuse_v1(x, adapt_pe(pe, t))); }, a);
        CHECK(err < 1e-6);
    }
}
