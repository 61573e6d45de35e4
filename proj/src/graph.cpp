#include "hypegt/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include "hypegt/errors.hpp"
#include "hypegt/text.hpp"

namespace hypegt {

Graph Graph::build(std::size_t n,
                   const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    Graph g;
    g.n = n;
    std::vector<std::vector<std::size_t>> adj(n);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (auto [u, v] : edges) {
        if (u >= n || v >= n) {
            throw DimensionError("Graph::build: edge (" + std::to_string(u) + ", " +
                                 std::to_string(v) + ") out of range for n=" +
                                 std::to_string(n));
        }
        if (u == v) {
            throw ContractError("Graph::build: self-loop at node " + std::to_string(u));
        }
        auto key = std::minmax(u, v);
        if (!seen.insert(key).second) {
            throw ContractError("Graph::build: duplicate edge (" + std::to_string(key.first) +
                                ", " + std::to_string(key.second) + ")");
        }
        adj[u].push_back(v);
        adj[v].push_back(u);
    }
    g.offsets.assign(n + 1, 0);
    for (std::size_t u = 0; u < n; ++u) {
        std::sort(adj[u].begin(), adj[u].end());
        g.offsets[u + 1] = g.offsets[u] + adj[u].size();
    }
    g.targets.reserve(g.offsets[n]);
    for (std::size_t u = 0; u < n; ++u)
        g.targets.insert(g.targets.end(), adj[u].begin(), adj[u].end());

    g.features = Tensor(n, 1);
    g.labels.assign(n, 0);
    g.num_classes = 1;
    g.train_mask.assign(n, 0);
    g.val_mask.assign(n, 0);
    g.test_mask.assign(n, 0);
    return g;
}

bool Graph::has_edge(std::size_t u, std::size_t v) const {
    for (std::size_t k = offsets[u]; k < offsets[u + 1]; ++k)
        if (targets[k] == v) return true;
    return false;
}

std::vector<std::pair<std::size_t, std::size_t>> Graph::edge_list() const {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    edges.reserve(num_edges());
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t k = offsets[u]; k < offsets[u + 1]; ++k)
            if (targets[k] > u) edges.emplace_back(u, targets[k]);
    return edges;
}

Tensor Graph::adjacency_dense() const {
    Tensor a(n, n);
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t k = offsets[u]; k < offsets[u + 1]; ++k)
            a.at(u, targets[k]) = 1.0;
    return a;
}

SparseMatrix rw_matrix(const Graph& g) {
    for (std::size_t u = 0; u < g.n; ++u) {
        if (g.degree(u) == 0) {
            throw DegenerateDegreeError("rw_matrix: node " + std::to_string(u) +
                                        " has degree zero");
        }
    }
    SparseMatrix s;
    s.n_rows = g.n;
    s.n_cols = g.n;
    s.offsets = g.offsets;
    s.cols = g.targets;
    s.vals.resize(g.targets.size());
    for (std::size_t u = 0; u < g.n; ++u)
        for (std::size_t k = g.offsets[u]; k < g.offsets[u + 1]; ++k)
            s.vals[k] = 1.0 / static_cast<double>(g.degree(g.targets[k]));
    return s;
}

Tensor laplacian_dense(const Graph& g, LaplacianKind kind) {
    Tensor l(g.n, g.n);
    if (kind == LaplacianKind::Unnormalized) {
        for (std::size_t u = 0; u < g.n; ++u) {
            l.at(u, u) = static_cast<double>(g.degree(u));
            for (std::size_t k = g.offsets[u]; k < g.offsets[u + 1]; ++k)
                l.at(u, g.targets[k]) = -1.0;
        }
        return l;
    }
    for (std::size_t u = 0; u < g.n; ++u) {
        if (g.degree(u) == 0) {
            throw DegenerateDegreeError("laplacian_dense: node " + std::to_string(u) +
                                        " has degree zero");
        }
    }
    for (std::size_t u = 0; u < g.n; ++u) {
        l.at(u, u) = 1.0;
        double du = std::sqrt(static_cast<double>(g.degree(u)));
        for (std::size_t k = g.offsets[u]; k < g.offsets[u + 1]; ++k) {
            std::size_t v = g.targets[k];
            double dv = std::sqrt(static_cast<double>(g.degree(v)));
            l.at(u, v) = -1.0 / (du * dv);
        }
    }
    return l;
}

std::shared_ptr<const SparseMatrix> gcn_norm(const Graph& g) {
    auto s = std::make_shared<SparseMatrix>();
    s->n_rows = g.n;
    s->n_cols = g.n;
    std::vector<double> inv_sqrt(g.n);
    for (std::size_t u = 0; u < g.n; ++u)
        inv_sqrt[u] = 1.0 / std::sqrt(static_cast<double>(g.degree(u)) + 1.0);

    s->offsets.assign(g.n + 1, 0);
    for (std::size_t u = 0; u < g.n; ++u) s->offsets[u + 1] = s->offsets[u] + g.degree(u) + 1;
    s->cols.resize(s->offsets[g.n]);
    s->vals.resize(s->offsets[g.n]);
    for (std::size_t u = 0; u < g.n; ++u) {
        std::size_t w = s->offsets[u];
        bool placed_self = false;
        for (std::size_t k = g.offsets[u]; k < g.offsets[u + 1]; ++k) {
            std::size_t v = g.targets[k];
            if (!placed_self && v > u) {
                s->cols[w] = u;
                s->vals[w] = inv_sqrt[u] * inv_sqrt[u];
                placed_self = true;
                ++w;
            }
            s->cols[w] = v;
            s->vals[w] = inv_sqrt[u] * inv_sqrt[v];
            ++w;
        }
        if (!placed_self) {
            s->cols[w] = u;
            s->vals[w] = inv_sqrt[u] * inv_sqrt[u];
        }
    }
    return s;
}

std::vector<std::vector<std::size_t>> connected_components(const Graph& g) {
    std::vector<std::vector<std::size_t>> comps;
    std::vector<std::uint8_t> visited(g.n, 0);
    for (std::size_t start = 0; start < g.n; ++start) {
        if (visited[start]) continue;
        std::vector<std::size_t> comp;
        std::deque<std::size_t> queue{start};
        visited[start] = 1;
        while (!queue.empty()) {
            std::size_t u = queue.front();
            queue.pop_front();
            comp.push_back(u);
            for (std::size_t k = g.offsets[u]; k < g.offsets[u + 1]; ++k) {
                std::size_t v = g.targets[k];
                if (!visited[v]) {
                    visited[v] = 1;
                    queue.push_back(v);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
    }
    return comps;
}

std::uint64_t graph_fingerprint(const Graph& g) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
        for (int byte = 0; byte < 8; ++byte) {
            h ^= (v >> (8 * byte)) & 0xffu;
            h *= 1099511628211ull;
        }
    };
    mix(g.n);
    for (std::size_t o : g.offsets) mix(o);
    for (std::size_t t : g.targets) mix(t);
    return h;
}

Graph sbm_generate(const SBMParams& params, std::uint64_t seed) {
    if (params.n == 0) throw ConfigError("sbm: n must be positive");
    if (params.blocks == 0 || params.blocks > params.n) {
        throw ConfigError("sbm: blocks must be in [1, n]");
    }
    if (!(params.p_in >= 0.0 && params.p_in <= 1.0) ||
        !(params.p_out >= 0.0 && params.p_out <= 1.0)) {
        throw ConfigError("sbm: probabilities must lie in [0, 1]");
    }
    if (params.p_out > params.p_in) {
        throw ConfigError("sbm: p_out must not exceed p_in");
    }
    if (params.feature_dim == 0) throw ConfigError("sbm: feature_dim must be positive");
    if (params.label_noise < 0.0 || params.label_noise > 1.0) {
        throw ConfigError("sbm: label_noise must lie in [0, 1]");
    }

    std::size_t n = params.n;
    std::size_t nblocks = params.blocks;
    std::vector<int> labels(n);
    {
        std::size_t base = n / nblocks;
        std::size_t rem = n % nblocks;
        std::size_t idx = 0;
        for (std::size_t b = 0; b < nblocks; ++b) {
            std::size_t size = base + (b < rem ? 1 : 0);
            for (std::size_t t = 0; t < size; ++t) labels[idx++] = static_cast<int>(b);
        }
    }

    Rng root(seed);
    Rng edges_rng = root.stream("sbm/edges");
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = u + 1; v < n; ++v) {
            double p = labels[u] == labels[v] ? params.p_in : params.p_out;
            if (edges_rng.uniform() < p) edges.emplace_back(u, v);
        }
    }
    Graph g = Graph::build(n, edges);
    g.labels = labels;
    g.num_classes = nblocks;

    Rng indicator_rng = root.stream("sbm/indicator");
    Rng jitter_rng = root.stream("sbm/jitter");
    g.features = Tensor(n, params.feature_dim);
    for (std::size_t u = 0; u < n; ++u) {
        std::size_t block = static_cast<std::size_t>(labels[u]);
        if (nblocks > 1 && indicator_rng.uniform() < params.label_noise) {
            std::size_t other = indicator_rng.uniform_index(nblocks - 1);
            block = other >= block ? other + 1 : other;
        }
        g.features.at(u, block % params.feature_dim) = 1.0;
        for (std::size_t d = 0; d < params.feature_dim; ++d)
            g.features.at(u, d) += jitter_rng.normal(0.0, params.jitter_sigma);
    }

    Rng mask_rng = root.stream("sbm/masks");
    g.train_mask.assign(n, 0);
    g.val_mask.assign(n, 0);
    g.test_mask.assign(n, 0);
    for (std::size_t b = 0; b < nblocks; ++b) {
        std::vector<std::size_t> members;
        for (std::size_t u = 0; u < n; ++u)
            if (labels[u] == static_cast<int>(b)) members.push_back(u);
        mask_rng.shuffle(members);
        std::size_t m = members.size();
        std::size_t n_val = m / 5;
        std::size_t n_test = m / 5;
        for (std::size_t i = 0; i < m; ++i) {
            if (i < n_val) {
                g.val_mask[members[i]] = 1;
            } else if (i < n_val + n_test) {
                g.test_mask[members[i]] = 1;
            } else {
                g.train_mask[members[i]] = 1;
            }
        }
    }
    return g;
}

namespace {

std::string mask_line(const std::vector<std::uint8_t>& mask) {
    std::string out;
    bool first = true;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        if (!first) out += ' ';
        out += std::to_string(i);
        first = false;
    }
    return out;
}

std::vector<std::uint8_t> parse_mask(const std::string& line, std::size_t n,
                                     const char* which) {
    std::vector<std::uint8_t> mask(n, 0);
    for (const std::string& tok : split_ws(line)) {
        long idx = parse_long(tok);
        if (idx < 0 || static_cast<std::size_t>(idx) >= n) {
            throw IoError(std::string("graph file: ") + which + " index " + tok +
                          " out of range");
        }
        mask[static_cast<std::size_t>(idx)] = 1;
    }
    return mask;
}

}  // namespace

std::string graph_to_string(const Graph& g) {
    std::ostringstream out;
    std::size_t d = g.features.cols();
    out << g.n << ' ' << d << ' ' << g.num_classes << '\n';
    for (std::size_t u = 0; u < g.n; ++u) {
        out << g.labels[u];
        for (std::size_t c = 0; c < d; ++c) out << ' ' << fmt_double(g.features.at(u, c));
        out << '\n';
    }
    for (auto [u, v] : g.edge_list()) out << u << ' ' << v << '\n';
    out << mask_line(g.train_mask) << '\n';
    out << mask_line(g.val_mask) << '\n';
    out << mask_line(g.test_mask) << '\n';
    return out.str();
}

void save_graph(const Graph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("save_graph: cannot open " + path);
    out << graph_to_string(g);
    if (!out) throw IoError("save_graph: write failed for " + path);
}

Graph graph_from_lines(const std::vector<std::string>& lines) {
    if (lines.size() < 4) throw IoError("graph file: too few lines");
    auto header = split_ws(lines[0]);
    if (header.size() != 3) throw IoError("graph file: header must be 'n d num_classes'");
    long n_l = parse_long(header[0]);
    long d_l = parse_long(header[1]);
    long c_l = parse_long(header[2]);
    if (n_l <= 0 || d_l <= 0 || c_l <= 0) throw IoError("graph file: non-positive header field");
    std::size_t n = static_cast<std::size_t>(n_l);
    std::size_t d = static_cast<std::size_t>(d_l);
    std::size_t ncls = static_cast<std::size_t>(c_l);

    if (lines.size() < 1 + n + 3) throw IoError("graph file: truncated node section");

    Tensor features(n, d);
    std::vector<int> labels(n);
    for (std::size_t u = 0; u < n; ++u) {
        auto toks = split_ws(lines[1 + u]);
        if (toks.size() != 1 + d) {
            throw IoError("graph file: node line " + std::to_string(u) + " has " +
                          std::to_string(toks.size()) + " fields, expected " +
                          std::to_string(1 + d));
        }
        long lab = parse_long(toks[0]);
        if (lab < 0 || static_cast<std::size_t>(lab) >= ncls) {
            throw IoError("graph file: label " + toks[0] + " out of range at node " +
                          std::to_string(u));
        }
        labels[u] = static_cast<int>(lab);
        for (std::size_t c = 0; c < d; ++c) features.at(u, c) = parse_double(toks[1 + c]);
    }

    std::size_t edge_end = lines.size() - 3;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 1 + n; i < edge_end; ++i) {
        auto toks = split_ws(lines[i]);
        if (toks.size() != 2) {
            throw IoError("graph file: edge line '" + lines[i] + "' must have two fields");
        }
        long u = parse_long(toks[0]);
        long v = parse_long(toks[1]);
        if (u < 0 || v < 0) throw IoError("graph file: negative node id in edge");
        edges.emplace_back(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
    }

    Graph g = Graph::build(n, edges);
    g.features = std::move(features);
    g.labels = std::move(labels);
    g.num_classes = ncls;
    g.train_mask = parse_mask(lines[edge_end], n, "train");
    g.val_mask = parse_mask(lines[edge_end + 1], n, "val");
    g.test_mask = parse_mask(lines[edge_end + 2], n, "test");
    for (std::size_t u = 0; u < n; ++u) {
        int total = (g.train_mask[u] ? 1 : 0) + (g.val_mask[u] ? 1 : 0) + (g.test_mask[u] ? 1 : 0);
        if (total > 1) {
            throw IoError("graph file: node " + std::to_string(u) +
                          " appears in multiple splits");
        }
    }
    return g;
}

Graph load_graph(const std::string& path) { return graph_from_lines(read_lines(path)); }

}  // namespace hypegt
