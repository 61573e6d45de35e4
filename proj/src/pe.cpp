#include "hypegt/pe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "hypegt/errors.hpp"
#include "hypegt/jacobi.hpp"
#include "hypegt/text.hpp"

namespace hypegt {

const CategoryMap& default_categories() {
    static const CategoryMap map = {{
        {PEInit::LapPE, ManifoldKind::Hyperboloid, NetKind::HGCN},   // 1
        {PEInit::LapPE, ManifoldKind::Hyperboloid, NetKind::HNN},    // 2
        {PEInit::LapPE, ManifoldKind::PoincareBall, NetKind::HNN},   // 3
        {PEInit::LapPE, ManifoldKind::PoincareBall, NetKind::HGCN},  // 4
        {PEInit::RWPE, ManifoldKind::Hyperboloid, NetKind::HGCN},    // 5
        {PEInit::RWPE, ManifoldKind::Hyperboloid, NetKind::HNN},     // 6
        {PEInit::RWPE, ManifoldKind::PoincareBall, NetKind::HGCN},   // 7
        {PEInit::RWPE, ManifoldKind::PoincareBall, NetKind::HNN},    // 8
    }};
    return map;
}

const PECategory& resolve_category(int id, const CategoryMap& map) {
    if (id < 1 || id > 8) {
        throw ConfigError("category must be in 1..8, got " + std::to_string(id));
    }
    return map[static_cast<std::size_t>(id - 1)];
}

std::string pe_init_name(PEInit init) { return init == PEInit::LapPE ? "lap" : "rw"; }

std::string net_kind_name(NetKind net) { return net == NetKind::HNN ? "hnn" : "hgcn"; }

namespace {

constexpr double kZeroEigenTol = 1e-9;
constexpr double kSignEntryTol = 1e-12;

// Sign canonicalization: flip so the first entry larger than the tolerance in
// magnitude is positive.
void canonicalize_sign(std::vector<double>& v) {
    for (double x : v) {
        if (std::abs(x) > kSignEntryTol) {
            if (x < 0.0)
                for (double& y : v) y = -y;
            return;
        }
    }
}

Graph induced_subgraph(const Graph& g, const std::vector<std::size_t>& nodes,
                       std::vector<std::size_t>& local_of) {
    for (std::size_t i = 0; i < nodes.size(); ++i) local_of[nodes[i]] = i;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t u : nodes)
        for (std::size_t k = g.offsets[u]; k < g.offsets[u + 1]; ++k) {
            std::size_t v = g.targets[k];
            if (v > u) edges.emplace_back(local_of[u], local_of[v]);
        }
    return Graph::build(nodes.size(), edges);
}

}  // namespace

Tensor lap_pe(const Graph& g, std::size_t k, LaplacianKind kind) {
    if (k == 0) throw ContractError("lap_pe: k must be positive");
    if (k >= g.n) {
        throw RankError("lap_pe: k=" + std::to_string(k) + " requires more than " +
                        std::to_string(g.n) + " nodes");
    }
    Tensor out(g.n, k);
    std::vector<std::size_t> local_of(g.n, 0);
    for (const auto& comp : connected_components(g)) {
        Graph sub = induced_subgraph(g, comp, local_of);
        Tensor lap = laplacian_dense(sub, kind);
        EighResult eig = jacobi_eigh(lap);
        std::size_t m = comp.size();

        // Indices of eigenvalues past the zero modes, ascending; ties within
        // 1e-9 are ordered by the canonicalized vectors lexicographically.
        std::vector<std::size_t> chosen;
        for (std::size_t j = 0; j < m && chosen.size() < k; ++j) {
            if (eig.eigenvalues[j] > kZeroEigenTol) chosen.push_back(j);
        }

        std::vector<std::vector<double>> vecs(chosen.size());
        for (std::size_t t = 0; t < chosen.size(); ++t) {
            vecs[t].resize(m);
            for (std::size_t i = 0; i < m; ++i) vecs[t][i] = eig.eigenvectors.at(i, chosen[t]);
            canonicalize_sign(vecs[t]);
        }
        std::vector<std::size_t> order(chosen.size());
        for (std::size_t t = 0; t < order.size(); ++t) order[t] = t;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            double la = eig.eigenvalues[chosen[a]];
            double lb = eig.eigenvalues[chosen[b]];
            if (std::abs(la - lb) > kZeroEigenTol) return la < lb;
            return vecs[a] < vecs[b];
        });

        for (std::size_t col = 0; col < order.size(); ++col) {
            const auto& v = vecs[order[col]];
            double norm = 0.0;
            for (double x : v) norm += x * x;
            norm = std::sqrt(norm);
            for (std::size_t i = 0; i < m; ++i) out.at(comp[i], col) = v[i] / norm;
        }
        // Columns beyond the component's spectrum stay zero.
    }
    return out;
}

Tensor rw_pe(const Graph& g, std::size_t k) {
    if (k == 0) throw ContractError("rw_pe: k must be positive");
    SparseMatrix rw = rw_matrix(g);
    auto rw_ptr = std::make_shared<const SparseMatrix>(std::move(rw));
    Tensor out(g.n, k);
    Tensor b = Tensor::identity(g.n);
    for (std::size_t s = 0; s < k; ++s) {
        b = spmm(rw_ptr, b);
        for (std::size_t i = 0; i < g.n; ++i) out.at(i, s) = b.at(i, i);
    }
    return out;
}

Tensor project_init(const Tensor& p_init, const Tensor& w0) {
    if (p_init.cols() != w0.rows()) {
        throw DimensionError("project_init: encoding width " + std::to_string(p_init.cols()) +
                             " does not match projection rows " + std::to_string(w0.rows()));
    }
    return matmul(p_init, w0);
}

void validate_pe_config(const PEConfig& cfg) {
    resolve_category(cfg.category);
    if (cfg.init_dim == 0) throw ConfigError("pe: init_dim must be positive");
    if (cfg.k == 0) throw ConfigError("pe: k must be positive");
    if (cfg.layers < 1 || cfg.layers > 5) {
        throw ConfigError("pe: layers must be in 1..5, got " + std::to_string(cfg.layers));
    }
    if (!(cfg.curvature > 0.0)) throw ConfigError("pe: curvature must be positive");
}

namespace {

std::vector<std::size_t> encoder_widths(const PEConfig& cfg) {
    std::size_t hidden = cfg.hidden == 0 ? cfg.k : cfg.hidden;
    std::vector<std::size_t> widths(cfg.layers + 1, hidden);
    widths.front() = cfg.k;
    widths.back() = cfg.k;
    return widths;
}

void glorot_fill(Tensor& t, const Rng& root, const std::string& name) {
    Rng stream = root.stream("init/" + name);
    double limit = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
    for (double& v : t.data) v = stream.uniform(-limit, limit);
}

}  // namespace

PEEncoderParams PEEncoderParams::init(const PEConfig& cfg, const Rng& root) {
    validate_pe_config(cfg);
    PEEncoderParams p;
    p.w0 = Tensor(cfg.init_dim, cfg.k);
    glorot_fill(p.w0, root, "pe/w0");
    auto widths = encoder_widths(cfg);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        Tensor w(widths[l], widths[l + 1]);
        glorot_fill(w, root, "pe/w" + std::to_string(l + 1));
        p.weights.push_back(std::move(w));
        // nonzero init: the regularized exp map has zero derivative at the
        // exact origin, so an all-zero bias would never receive gradient
        Tensor b(1, widths[l + 1]);
        Rng stream = root.stream("init/pe/b" + std::to_string(l + 1));
        for (double& v : b.data) v = stream.uniform(-0.01, 0.01);
        p.biases.push_back(std::move(b));
    }
    return p;
}

std::vector<std::pair<std::string, Tensor*>> PEEncoderParams::named(const std::string& prefix) {
    std::vector<std::pair<std::string, Tensor*>> out;
    out.emplace_back(prefix + "w0", &w0);
    for (std::size_t l = 0; l < weights.size(); ++l) {
        out.emplace_back(prefix + "w" + std::to_string(l + 1), &weights[l]);
        out.emplace_back(prefix + "b" + std::to_string(l + 1), &biases[l]);
    }
    return out;
}

namespace {

// One hyperbolic layer up to the pre-activation tangent vector:
// log_o(proj(exp_o(W log_o(h)) (+) b)).
Tensor layer_tangent(const Tensor& h, const Tensor& w, const Tensor& bias,
                     const ManifoldSpec& spec) {
    Tensor t = tangent_spatial(spec, log_origin(spec, h));
    if (t.cols() != w.rows()) {
        throw DimensionError("encoder layer: tangent width " + std::to_string(t.cols()) +
                             " does not match weight rows " + std::to_string(w.rows()));
    }
    Tensor z = exp_origin(spec, tangent_project(spec, matmul(t, w)));
    Tensor bias_rows = broadcast_rows(bias, z.rows());
    Tensor b_point = exp_origin(spec, tangent_project(spec, bias_rows));
    Tensor shifted = manifold_project(spec, manifold_add(spec, z, b_point));
    return log_origin(spec, shifted);
}

HBatch encoder_forward(const Tensor& p_hat, const std::shared_ptr<const SparseMatrix>* ghat,
                       const PEEncoderParams& params, const ManifoldSpec& spec) {
    validate_spec(spec);
    if (params.weights.empty()) throw ContractError("encoder: no layers");
    if (p_hat.cols() != params.weights.front().rows()) {
        throw DimensionError("encoder: input width " + std::to_string(p_hat.cols()) +
                             " does not match first layer");
    }
    Tensor h = exp_origin(spec, tangent_project(spec, p_hat));
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        Tensor t = layer_tangent(h, params.weights[l], params.biases[l], spec);
        if (ghat != nullptr) t = spmm(*ghat, t);
        h = exp_origin(spec, relu(t));
    }
    return HBatch{spec, h};
}

}  // namespace

HBatch hnn_forward(const Tensor& p_hat, const PEEncoderParams& params,
                   const ManifoldSpec& spec) {
    return encoder_forward(p_hat, nullptr, params, spec);
}

HBatch hgcn_forward(const Tensor& p_hat, const std::shared_ptr<const SparseMatrix>& ghat,
                    const PEEncoderParams& params, const ManifoldSpec& spec) {
    if (!ghat) throw ContractError("hgcn_forward: null propagation matrix");
    if (ghat->n_rows != p_hat.rows()) {
        throw DimensionError("hgcn_forward: propagation matrix size does not match batch");
    }
    return encoder_forward(p_hat, &ghat, params, spec);
}

namespace {

Tensor raw_encoding(const Graph& g, const PEConfig& cfg, const PECategory& cat) {
    return cat.init == PEInit::LapPE ? lap_pe(g, cfg.init_dim, cfg.lap_kind)
                                     : rw_pe(g, cfg.init_dim);
}

}  // namespace

HBatch generate_pe(const Graph& g, const PEConfig& cfg, const PEEncoderParams& params,
                   const CategoryMap& map) {
    validate_pe_config(cfg);
    const PECategory& cat = resolve_category(cfg.category, map);
    ManifoldSpec spec{cat.manifold, cfg.curvature};
    Tensor p_hat = project_init(raw_encoding(g, cfg, cat), params.w0);
    if (cat.network == NetKind::HNN) return hnn_forward(p_hat, params, spec);
    return hgcn_forward(p_hat, gcn_norm(g), params, spec);
}

PEPipeline::PEPipeline(const PEConfig& cfg, const Rng& init_rng, const CategoryMap& map)
    : cfg_(cfg), cat_(resolve_category(cfg.category, map)) {
    validate_pe_config(cfg_);
    params_ = PEEncoderParams::init(cfg_, init_rng);
}

HBatch PEPipeline::generate(const Graph& g) {
    std::uint64_t fp = graph_fingerprint(g);
    if (!cached_ || cached_fp_ != fp) {
        init_ = raw_encoding(g, cfg_, cat_);
        if (cat_.network == NetKind::HGCN) ghat_ = gcn_norm(g);
        cached_ = true;
        cached_fp_ = fp;
    }
    ManifoldSpec spec{cat_.manifold, cfg_.curvature};
    Tensor p_hat = project_init(init_, params_.w0);
    if (cat_.network == NetKind::HNN) return hnn_forward(p_hat, params_, spec);
    return hgcn_forward(p_hat, ghat_, params_, spec);
}

std::string pe_to_string(const HBatch& pe, int category) {
    std::ostringstream out;
    out << pe.points.rows() << ' ' << pe.intrinsic_dim() << ' '
        << manifold_name(pe.spec.kind) << ' ' << fmt_double(pe.spec.c) << ' ' << category
        << '\n';
    for (std::size_t r = 0; r < pe.points.rows(); ++r) {
        for (std::size_t c = 0; c < pe.points.cols(); ++c) {
            if (c) out << ' ';
            out << fmt_double(pe.points.at(r, c));
        }
        out << '\n';
    }
    return out.str();
}

void save_pe(const HBatch& pe, int category, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("save_pe: cannot open " + path);
    out << pe_to_string(pe, category);
    if (!out) throw IoError("save_pe: write failed for " + path);
}

}  // namespace hypegt
