#pragma once

#include "hypegt/manifold.hpp"
#include "hypegt/tensor.hpp"

namespace hypegt {

enum class FuseStrategy { V1, V2 };
enum class InjectionPoint { EveryLayer, FinalLayerOnly };

// Strategy 1: lift features onto the manifold, combine there, map back:
//   log_o( exp_o(tan_proj(x)) (+) p ).
Tensor fuse_v1(const Tensor& x, const HBatch& pe);

// Strategy 2: map the encoding to the tangent space and add in Euclidean
// coordinates: x + log_o(p).
Tensor fuse_v2(const Tensor& x, const HBatch& pe);

Tensor fuse(const Tensor& x, const HBatch& pe, FuseStrategy strategy);

// Injection into a deep GNN layer output (same operation, named for intent).
Tensor inject_deep(const Tensor& h, const HBatch& pe, FuseStrategy strategy);

// Re-express an encoding in a different manifold dimension through a learned
// tangent-space linear map: exp_o(tan_proj(tangent(p) A)).
HBatch adapt_pe(const HBatch& pe, const Tensor& a);

}  // namespace hypegt
