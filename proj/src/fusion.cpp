#include "hypegt/fusion.hpp"

#include "hypegt/errors.hpp"

namespace hypegt {

namespace {

void check_fusable(const Tensor& x, const HBatch& pe) {
    if (x.rows() != pe.points.rows()) {
        throw DimensionError("fuse: row count mismatch (" + std::to_string(x.rows()) +
                             " features vs " + std::to_string(pe.points.rows()) +
                             " encodings)");
    }
    if (x.cols() != pe.intrinsic_dim()) {
        throw DimensionError("fuse: feature width " + std::to_string(x.cols()) +
                             " does not match encoding dimension " +
                             std::to_string(pe.intrinsic_dim()));
    }
    check_on_manifold(pe.spec, pe.points);
}

}  // namespace

Tensor fuse_v1(const Tensor& x, const HBatch& pe) {
    check_fusable(x, pe);
    Tensor lifted = exp_origin(pe.spec, tangent_project(pe.spec, x));
    Tensor combined = manifold_add(pe.spec, lifted, pe.points);
    return tangent_spatial(pe.spec, log_origin(pe.spec, combined));
}

Tensor fuse_v2(const Tensor& x, const HBatch& pe) {
    check_fusable(x, pe);
    return add(x, tangent_spatial(pe.spec, log_origin(pe.spec, pe.points)));
}

Tensor fuse(const Tensor& x, const HBatch& pe, FuseStrategy strategy) {
    return strategy == FuseStrategy::V1 ? fuse_v1(x, pe) : fuse_v2(x, pe);
}

Tensor inject_deep(const Tensor& h, const HBatch& pe, FuseStrategy strategy) {
    return fuse(h, pe, strategy);
}

HBatch adapt_pe(const HBatch& pe, const Tensor& a) {
    Tensor t = tangent_spatial(pe.spec, log_origin(pe.spec, pe.points));
    if (t.cols() != a.rows()) {
        throw DimensionError("adapt_pe: encoding dimension " + std::to_string(t.cols()) +
                             " does not match adapter rows " + std::to_string(a.rows()));
    }
    Tensor mapped = matmul(t, a);
    return HBatch{pe.spec, exp_origin(pe.spec, tangent_project(pe.spec, mapped))};
}

}  // namespace hypegt
