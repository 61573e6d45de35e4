#include "hypegt/verify.hpp"

#include <cmath>
#include <utility>

#include "hypegt/errors.hpp"
#include "hypegt/fusion.hpp"
#include "hypegt/graph.hpp"
#include "hypegt/manifold.hpp"
#include "hypegt/models.hpp"
#include "hypegt/pe.hpp"
#include "hypegt/text.hpp"
#include "hypegt/training.hpp"

namespace hypegt {

namespace {

PropertyResult prop(std::string name, double measured, double tolerance) {
    PropertyResult r;
    r.name = std::move(name);
    r.measured = measured;
    r.tolerance = tolerance;
    r.pass = std::isfinite(measured) && measured <= tolerance;
    return r;
}

Tensor random_matrix(Rng& rng, std::size_t n, std::size_t k, double scale) {
    Tensor t(n, k);
    for (double& v : t.data) v = rng.normal(0.0, scale);
    return t;
}

// Rows rescaled so every row norm stays at or below `cap`.
Tensor bounded_tangents(Rng& rng, std::size_t n, std::size_t k, double cap) {
    Tensor t = random_matrix(rng, n, k, 1.0);
    for (std::size_t r = 0; r < n; ++r) {
        double norm = 0.0;
        for (std::size_t c = 0; c < k; ++c) norm += t.at(r, c) * t.at(r, c);
        norm = std::sqrt(norm);
        double want = rng.uniform(0.0, cap);
        double s = norm > 0 ? want / norm : 0.0;
        for (std::size_t c = 0; c < k; ++c) t.at(r, c) *= s;
    }
    return t;
}

double max_abs(const Tensor& t) {
    double worst = 0.0;
    for (double v : t.data) worst = std::max(worst, std::abs(v));
    return worst;
}

double max_diff(const Tensor& a, const Tensor& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
    return worst;
}

Graph random_connected_graph(Rng& rng, std::size_t n, double extra_edge_prob) {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t u = 1; u < n; ++u) edges.emplace_back(rng.uniform_index(u), u);
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v)
            if (rng.uniform() < extra_edge_prob) edges.emplace_back(u, v);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return Graph::build(n, edges);
}

Graph permuted_graph(const Graph& g, const std::vector<std::size_t>& perm) {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (auto [u, v] : g.edge_list()) edges.emplace_back(perm[u], perm[v]);
    Graph out = Graph::build(g.n, edges);
    out.features = Tensor(g.n, g.features.cols());
    out.labels.assign(g.n, 0);
    out.num_classes = g.num_classes;
    out.train_mask.assign(g.n, 0);
    out.val_mask.assign(g.n, 0);
    out.test_mask.assign(g.n, 0);
    for (std::size_t u = 0; u < g.n; ++u) {
        for (std::size_t c = 0; c < g.features.cols(); ++c)
            out.features.at(perm[u], c) = g.features.at(u, c);
        out.labels[perm[u]] = g.labels[u];
        out.train_mask[perm[u]] = g.train_mask[u];
        out.val_mask[perm[u]] = g.val_mask[u];
        out.test_mask[perm[u]] = g.test_mask[u];
    }
    return out;
}

SBMParams small_sbm() {
    SBMParams sp;
    sp.n = 24;
    sp.blocks = 2;
    sp.p_in = 0.5;
    sp.p_out = 0.08;
    sp.feature_dim = 3;
    return sp;
}

}  // namespace

std::vector<PropertyResult> verify_manifolds(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<PropertyResult> out;

    for (ManifoldKind kind : {ManifoldKind::Hyperboloid, ManifoldKind::PoincareBall}) {
        double worst_round = 0.0, worst_constraint = 0.0;
        for (double c : {0.5, 1.0, 2.0}) {
            ManifoldSpec spec{kind, c};
            Tensor v = bounded_tangents(rng, 100, 5, 3.0);
            Tensor lifted = tangent_project(spec, v);
            Tensor x = exp_origin(spec, lifted);
            worst_constraint = std::max(worst_constraint, manifold_max_violation(spec, x));
            Tensor back = tangent_spatial(spec, log_origin(spec, x));
            worst_round = std::max(worst_round, max_diff(back, v));
        }
        std::string tag = manifold_name(kind);
        out.push_back(prop("exp_log_roundtrip_" + tag, worst_round, 1e-8));
        out.push_back(prop("exp_on_manifold_" + tag, worst_constraint, 1e-8));
    }

    ManifoldSpec ball{ManifoldKind::PoincareBall, 1.0};
    Tensor pts = exp_origin(ball, bounded_tangents(rng, 100, 4, 2.0));
    Tensor zero = Tensor::zeros(100, 4);
    out.push_back(
        prop("mobius_left_identity", max_diff(mobius_add(ball, zero, pts), pts), 1e-12));
    out.push_back(prop("mobius_left_inverse",
                       max_abs(mobius_add(ball, scalar_mul(pts, -1.0), pts)), 1e-12));

    ManifoldSpec hyp{ManifoldKind::Hyperboloid, 2.0};
    Tensor hpts = exp_origin(hyp, tangent_project(hyp, bounded_tangents(rng, 50, 4, 2.0)));
    Tensor damaged = hpts;
    for (double& v : damaged.data) v += 0.01;
    out.push_back(prop("projection_repair",
                       manifold_max_violation(hyp, manifold_project(hyp, damaged)), 1e-8));
    return out;
}

std::vector<PropertyResult> verify_pe(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<PropertyResult> out;

    double worst_rw = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        Graph g = random_connected_graph(rng, 8 + 4 * trial, 0.15);
        std::size_t k = 4;
        Tensor enc = rw_pe(g, k);
        NoTape guard;
        Tensor dense = rw_matrix(g).to_dense();
        Tensor power = Tensor::identity(g.n);
        for (std::size_t s = 1; s <= k; ++s) {
            power = matmul(dense, power);
            for (std::size_t u = 0; u < g.n; ++u)
                worst_rw = std::max(worst_rw, std::abs(enc.at(u, s - 1) - power.at(u, u)));
        }
    }
    out.push_back(prop("rw_dense_oracle", worst_rw, 1e-12));

    Graph g = random_connected_graph(rng, 18, 0.2);
    std::size_t k = 5;
    Tensor u = lap_pe(g, k);
    NoTape guard;
    Tensor lap = laplacian_dense(g, LaplacianKind::SymNormalized);
    Tensor lu = matmul(lap, u);
    double worst_residual = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        double num = 0.0, den = 0.0;
        for (std::size_t r = 0; r < g.n; ++r) {
            num += u.at(r, j) * lu.at(r, j);
            den += u.at(r, j) * u.at(r, j);
        }
        double lambda = num / den;
        for (std::size_t r = 0; r < g.n; ++r)
            worst_residual =
                std::max(worst_residual, std::abs(lu.at(r, j) - lambda * u.at(r, j)));
    }
    out.push_back(prop("lap_eigen_residual", worst_residual, 1e-8));
    Tensor gram = matmul(transpose(u), u);
    out.push_back(
        prop("lap_orthonormal", max_diff(gram, Tensor::identity(k)), 1e-8));

    std::vector<std::size_t> perm(g.n);
    for (std::size_t i = 0; i < g.n; ++i) perm[i] = i;
    Rng(seed ^ 0x9e3779b97f4a7c15ull).shuffle(perm);
    Graph pg = permuted_graph(g, perm);
    Tensor rw = rw_pe(g, 4), prw = rw_pe(pg, 4);
    double worst_equi = 0.0;
    for (std::size_t r = 0; r < g.n; ++r)
        for (std::size_t c = 0; c < 4; ++c)
            worst_equi =
                std::max(worst_equi, std::abs(prw.at(perm[r], c) - rw.at(r, c)));
    out.push_back(prop("rwpe_equivariance", worst_equi, 1e-12));

    Graph sg = sbm_generate(small_sbm(), seed + 1);
    double worst_manifold = 0.0, worst_repeat = 0.0;
    for (int cat = 1; cat <= 8; ++cat) {
        PEConfig cfg;
        cfg.category = cat;
        cfg.init_dim = 4;
        cfg.k = 5;
        cfg.layers = 2;
        cfg.curvature = 1.0;
        PEEncoderParams params = PEEncoderParams::init(cfg, Rng(seed + cat));
        HBatch pe = generate_pe(sg, cfg, params);
        worst_manifold =
            std::max(worst_manifold, manifold_max_violation(pe.spec, pe.points));
        HBatch again = generate_pe(sg, cfg, params);
        worst_repeat = std::max(worst_repeat, max_diff(again.points, pe.points));
    }
    out.push_back(prop("encoder_on_manifold_all_categories", worst_manifold, 1e-8));
    out.push_back(prop("encoder_deterministic", worst_repeat, 0.0));
    return out;
}

std::vector<PropertyResult> verify_gradients(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<PropertyResult> out;
    const double tol = 1e-4;

    PEConfig cfg;
    cfg.category = 1;
    cfg.init_dim = 3;
    cfg.k = 3;
    cfg.layers = 2;
    PEEncoderParams params = PEEncoderParams::init(cfg, Rng(seed + 1));
    ManifoldSpec hyp{ManifoldKind::Hyperboloid, 1.0};
    ManifoldSpec ball{ManifoldKind::PoincareBall, 1.0};
    Tensor p_hat = random_matrix(rng, 4, 3, 0.4);

    auto enc_err = [&](const ManifoldSpec& spec) {
        return grad_check(
            [&](const Tensor& t) { return sum(hnn_forward(t, params, spec).points); },
            p_hat);
    };
    out.push_back(prop("grad_encoder_hyperboloid", enc_err(hyp), tol));
    out.push_back(prop("grad_encoder_ball", enc_err(ball), tol));

    Graph ring = Graph::build(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
    auto ghat = gcn_norm(ring);
    out.push_back(prop(
        "grad_encoder_aggregating",
        grad_check(
            [&](const Tensor& t) {
                return sum(hgcn_forward(t, ghat, params, ball).points);
            },
            p_hat),
        tol));

    HBatch pe{ball, exp_origin(ball, bounded_tangents(rng, 4, 3, 1.0))};
    Tensor x = random_matrix(rng, 4, 3, 0.5);
    out.push_back(prop(
        "grad_fuse_v1",
        grad_check([&](const Tensor& t) { return sum(fuse_v1(t, pe)); }, x), tol));
    out.push_back(prop(
        "grad_fuse_v2",
        grad_check([&](const Tensor& t) { return sum(fuse_v2(t, pe)); }, x), tol));

    Tensor other = bounded_tangents(rng, 4, 3, 0.5);
    out.push_back(prop(
        "grad_mobius_chain",
        grad_check(
            [&](const Tensor& t) {
                Tensor a = exp_origin(ball, t);
                Tensor b = exp_origin(ball, other);
                return sum(log_origin(ball, mobius_add(ball, a, b)));
            },
            bounded_tangents(rng, 4, 3, 0.8)),
        tol));

    Tensor h = random_matrix(rng, 4, 4, 0.6);
    out.push_back(prop(
        "grad_gt_layer",
        grad_check(
            [&](const Tensor& t) {
                GTLayerParams lp = GTLayerParams::init(4, 2, Rng(seed + 2), "l/");
                return sum(gt_layer(t, lp, NormKind::BatchNorm, true));
            },
            h),
        tol));

    Tensor w = random_matrix(rng, 4, 4, 0.6);
    out.push_back(prop(
        "grad_gcn_layer",
        grad_check([&](const Tensor& t) { return sum(gcn_layer(t, ghat, w)); }, h),
        tol));
    Tensor h0 = random_matrix(rng, 4, 4, 0.6);
    out.push_back(prop(
        "grad_gcnii_layer",
        grad_check(
            [&](const Tensor& t) {
                return sum(gcnii_layer(t, h0, ghat, w, 0.2, gcnii_beta(0.5, 2)));
            },
            h),
        tol));

    std::vector<int> labels{0, 1, 0, 1};
    std::vector<std::uint8_t> mask{1, 1, 0, 1};
    out.push_back(prop(
        "grad_cross_entropy",
        grad_check(
            [&](const Tensor& t) { return cross_entropy(t, labels, mask); },
            random_matrix(rng, 4, 2, 1.0)),
        tol));
    return out;
}

std::vector<PropertyResult> verify_models(std::uint64_t seed) {
    std::vector<PropertyResult> out;
    Rng rng(seed);

    Tensor x = random_matrix(rng, 6, 4, 0.8);
    std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
    Tensor pmat = Tensor::zeros(6, 6);
    for (std::size_t i = 0; i < 6; ++i) pmat.at(i, perm[i]) = 1.0;
    GTLayerParams a = GTLayerParams::init(4, 2, Rng(seed + 1), "l/");
    GTLayerParams b = GTLayerParams::init(4, 2, Rng(seed + 1), "l/");
    Tensor lhs = gt_layer(matmul(pmat, x), a, NormKind::BatchNorm, true);
    Tensor rhs = matmul(pmat, gt_layer(x, b, NormKind::BatchNorm, true));
    out.push_back(prop("gt_layer_equivariance", max_diff(lhs, rhs), 1e-10));

    Graph g = sbm_generate(small_sbm(), seed + 2);
    std::vector<std::size_t> nperm(g.n);
    for (std::size_t i = 0; i < g.n; ++i) nperm[i] = i;
    Rng(seed + 3).shuffle(nperm);
    Graph pg = permuted_graph(g, nperm);
    ModelConfig mc;
    mc.kind = ModelKind::GCN;
    mc.in_dim = 3;
    mc.hidden = 8;
    mc.num_layers = 3;
    mc.num_classes = 2;
    ForwardResult base = make_model(mc, seed)->forward(g, g.features, false);
    ForwardResult permuted = make_model(mc, seed)->forward(pg, pg.features, false);
    double worst = 0.0;
    for (std::size_t r = 0; r < g.n; ++r)
        for (std::size_t c = 0; c < base.logits.cols(); ++c)
            worst = std::max(worst, std::abs(permuted.logits.at(nperm[r], c) -
                                             base.logits.at(r, c)));
    out.push_back(prop("gcn_model_equivariance", worst, 1e-10));

    ModelConfig gt;
    gt.kind = ModelKind::GT;
    gt.in_dim = 3;
    gt.hidden = 8;
    gt.heads = 2;
    gt.num_layers = 1;
    gt.num_classes = 2;
    gt.use_pe = true;
    gt.pe.category = 5;
    gt.pe.init_dim = 4;
    gt.pe.k = 8;
    auto model = make_model(gt, seed + 4);
    ForwardResult r1 = model->forward(g, g.features, false);
    ForwardResult r2 = make_model(gt, seed + 4)->forward(g, g.features, false);
    out.push_back(prop("model_forward_deterministic", max_diff(r1.logits, r2.logits), 0.0));

    std::string ckpt = checkpoint_to_string(*model);
    auto other = make_model(gt, seed + 5);
    std::vector<std::string> lines;
    std::string line;
    for (char ch : ckpt) {
        if (ch == '\n') {
            lines.push_back(line);
            line.clear();
        } else {
            line += ch;
        }
    }
    checkpoint_from_lines(*other, lines);
    double ck = checkpoint_to_string(*other) == ckpt ? 0.0 : 1.0;
    out.push_back(prop("checkpoint_roundtrip", ck, 0.0));
    return out;
}

std::vector<PropertyResult> verify_metrics(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<PropertyResult> out;

    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        std::size_t n = 24;
        Tensor logits(n, 2);
        std::vector<int> labels(n);
        std::vector<std::uint8_t> mask(n, 1);
        for (std::size_t i = 0; i < n; ++i) {
            logits.at(i, 1) = std::floor(rng.uniform(-2.0, 2.0) * 4.0) / 4.0;
            labels[i] = rng.uniform() < 0.5 ? 1 : 0;
        }
        labels[0] = 0;
        labels[1] = 1;
        double fast = auroc(logits, labels, mask);
        double wins = 0.0;
        std::size_t pairs = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (labels[i] != 1) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (labels[j] != 0) continue;
                ++pairs;
                double si = logits.at(i, 1), sj = logits.at(j, 1);
                wins += si > sj ? 1.0 : (si == sj ? 0.5 : 0.0);
            }
        }
        worst = std::max(worst, std::abs(fast - wins / static_cast<double>(pairs)));
    }
    out.push_back(prop("auroc_pairwise_oracle", worst, 1e-12));

    Tensor logits(3, 2, {0.5, 0.5, 1.0, 0.0, 0.0, 1.0});
    double acc = accuracy(logits, {0, 0, 1}, {1, 1, 1});
    out.push_back(prop("accuracy_oracle", std::abs(acc - 1.0), 0.0));

    Graph p2 = Graph::build(2, {{0, 1}});
    Tensor hh(2, 1, {1.0, 0.0});
    out.push_back(prop("dirichlet_single_edge",
                       std::abs(dirichlet_energy(hh, p2) - 0.5), 1e-15));

    Tensor p = Tensor::scalar(1.0);
    std::vector<Tensor*> params{&p};
    AdamState state = AdamState::init(params);
    std::vector<double> grad{0.5};
    std::vector<const std::vector<double>*> grads{&grad};
    adam_step(params, grads, state, AdamParams{}, 0.1);
    out.push_back(prop("adam_frozen_step", std::abs(p.value() - 0.900000002), 1e-15));

    LrSchedule sched;
    sched.lr = 0.01;
    for (int i = 0; i < 11; ++i) sched.observe(0.5);
    out.push_back(prop("schedule_halves_after_patience", std::abs(sched.lr - 0.005), 0.0));
    return out;
}

std::vector<PropertyResult> verify_all(std::uint64_t seed) {
    std::vector<PropertyResult> out;
    for (auto suite : {verify_manifolds, verify_pe, verify_gradients, verify_models,
                       verify_metrics}) {
        std::vector<PropertyResult> part = suite(seed);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

bool all_pass(const std::vector<PropertyResult>& results) {
    for (const PropertyResult& r : results)
        if (!r.pass) return false;
    return true;
}

std::string format_result(const PropertyResult& r) {
    std::string line = r.pass ? "[PASS] " : "[FAIL] ";
    line += r.name + " (measured=" + fmt_double(r.measured) +
            ", tol=" + fmt_double(r.tolerance) + ")";
    return line;
}

void print_results(const std::vector<PropertyResult>& results, std::ostream& out) {
    for (const PropertyResult& r : results) out << format_result(r) << "\n";
}

}  // namespace hypegt
