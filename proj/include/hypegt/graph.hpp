#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hypegt/rng.hpp"
#include "hypegt/tensor.hpp"

namespace hypegt {

// Simple undirected graph in CSR form (no self-loops, adjacency symmetric),
// with node features, labels and train/val/test split masks.
struct Graph {
    std::size_t n = 0;
    std::vector<std::size_t> offsets;  // n + 1
    std::vector<std::size_t> targets;  // sorted per row
    Tensor features;                   // n x d
    std::vector<int> labels;
    std::size_t num_classes = 1;
    std::vector<std::uint8_t> train_mask, val_mask, test_mask;

    static Graph build(std::size_t n,
                       const std::vector<std::pair<std::size_t, std::size_t>>& edges);

    std::size_t degree(std::size_t u) const { return offsets[u + 1] - offsets[u]; }
    std::size_t num_edges() const { return targets.size() / 2; }
    bool has_edge(std::size_t u, std::size_t v) const;

    // Undirected edge list with u < v, ascending.
    std::vector<std::pair<std::size_t, std::size_t>> edge_list() const;

    Tensor adjacency_dense() const;
};

enum class LaplacianKind { SymNormalized, Unnormalized };

// Random-walk transition matrix A D^{-1}; every column sums to one.
SparseMatrix rw_matrix(const Graph& g);

// Dense graph Laplacian. SymNormalized: I - D^{-1/2} A D^{-1/2};
// Unnormalized: D - A.
Tensor laplacian_dense(const Graph& g, LaplacianKind kind);

// First-order propagation matrix with self-loops:
// \tilde{D}^{-1/2} (A + I) \tilde{D}^{-1/2}.
std::shared_ptr<const SparseMatrix> gcn_norm(const Graph& g);

// Connected components, each sorted ascending, ordered by smallest member.
std::vector<std::vector<std::size_t>> connected_components(const Graph& g);

// Hash of the adjacency structure, used to key per-graph caches.
std::uint64_t graph_fingerprint(const Graph& g);

struct SBMParams {
    std::size_t n = 0;
    std::size_t blocks = 2;
    double p_in = 0.1;
    double p_out = 0.01;
    std::size_t feature_dim = 2;
    double label_noise = 0.0;   // probability a node's block indicator is wrong
    double jitter_sigma = 0.1;  // Gaussian jitter on features
};

// Stochastic block model with block-indicator features and a stratified
// 60/20/20 train/val/test split.
Graph sbm_generate(const SBMParams& params, std::uint64_t seed);

Graph load_graph(const std::string& path);
void save_graph(const Graph& g, const std::string& path);
std::string graph_to_string(const Graph& g);
Graph graph_from_lines(const std::vector<std::string>& lines);

}  // namespace hypegt
