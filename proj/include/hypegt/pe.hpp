#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hypegt/graph.hpp"
#include "hypegt/manifold.hpp"
#include "hypegt/rng.hpp"
#include "hypegt/tensor.hpp"

namespace hypegt {

enum class PEInit { LapPE, RWPE };
enum class NetKind { HNN, HGCN };

struct PECategory {
    PEInit init;
    ManifoldKind manifold;
    NetKind network;
};

using CategoryMap = std::array<PECategory, 8>;

// Categories 1..8 cover {LapPE, RWPE} x {Hyperboloid, PoincareBall} x {HNN, HGCN}.
const CategoryMap& default_categories();
const PECategory& resolve_category(int id, const CategoryMap& map = default_categories());
std::string pe_init_name(PEInit init);
std::string net_kind_name(NetKind net);

// First k eigenvectors of the graph Laplacian past the zero modes, computed
// per connected component, sign-canonicalized (first entry above 1e-12 in
// magnitude is positive) and zero-padded when a component is too small.
Tensor lap_pe(const Graph& g, std::size_t k,
              LaplacianKind kind = LaplacianKind::SymNormalized);

// Columns s = 1..k of return probabilities diag((A D^{-1})^s).
Tensor rw_pe(const Graph& g, std::size_t k);

// Linear projection of the raw encoding (shape check + matmul).
Tensor project_init(const Tensor& p_init, const Tensor& w0);

struct PEConfig {
    int category = 1;
    std::size_t init_dim = 8;  // columns of the raw encoding
    std::size_t k = 8;         // manifold dimension of the output
    std::size_t hidden = 0;    // inner encoder width; 0 means k
    std::size_t layers = 2;    // 1..5
    double curvature = 1.0;
    LaplacianKind lap_kind = LaplacianKind::SymNormalized;
};

void validate_pe_config(const PEConfig& cfg);

// Learnable encoder parameters: the init projection plus one weight/bias pair
// per layer. Layer widths run k -> hidden -> ... -> hidden -> k.
struct PEEncoderParams {
    Tensor w0;                    // init_dim x k
    std::vector<Tensor> weights;  // layers entries
    std::vector<Tensor> biases;   // layers entries, 1 x out_width

    static PEEncoderParams init(const PEConfig& cfg, const Rng& root);
    std::vector<std::pair<std::string, Tensor*>> named(const std::string& prefix);
};

// Stack of hyperbolic feed-forward layers:
//   h+ = exp_o(ReLU(log_o(proj(exp_o(W log_o(h)) (+) b)))).
HBatch hnn_forward(const Tensor& p_hat, const PEEncoderParams& params,
                   const ManifoldSpec& spec);

// Same with tangent-space neighborhood aggregation before the nonlinearity:
//   h+ = exp_o(ReLU(Ghat log_o(proj(exp_o(W log_o(h)) (+) b)))).
HBatch hgcn_forward(const Tensor& p_hat, const std::shared_ptr<const SparseMatrix>& ghat,
                    const PEEncoderParams& params, const ManifoldSpec& spec);

// Full pipeline: raw encoding -> projection -> hyperbolic encoder.
HBatch generate_pe(const Graph& g, const PEConfig& cfg, const PEEncoderParams& params,
                   const CategoryMap& map = default_categories());

// Caches the raw encoding and the propagation matrix across epochs.
class PEPipeline {
public:
    PEPipeline(const PEConfig& cfg, const Rng& init_rng,
               const CategoryMap& map = default_categories());

    HBatch generate(const Graph& g);
    PEEncoderParams& params() { return params_; }
    const PEConfig& config() const { return cfg_; }
    const PECategory& category() const { return cat_; }

private:
    PEConfig cfg_;
    PECategory cat_;
    PEEncoderParams params_;
    bool cached_ = false;
    std::uint64_t cached_fp_ = 0;
    Tensor init_;
    std::shared_ptr<const SparseMatrix> ghat_;
};

std::string pe_to_string(const HBatch& pe, int category);
void save_pe(const HBatch& pe, int category, const std::string& path);

}  // namespace hypegt
