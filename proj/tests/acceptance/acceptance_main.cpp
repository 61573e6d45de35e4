// Acceptance gate: one self-contained check per release criterion, each
// printing a single [PASS]/[FAIL] line with the measured values, the
// tolerances it was held to, and the elapsed time. Exit 0 iff all pass.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hypegt/cli.hpp"
#include "hypegt/errors.hpp"
#include "hypegt/experiments.hpp"
#include "hypegt/fusion.hpp"
#include "hypegt/graph.hpp"
#include "hypegt/manifold.hpp"
#include "hypegt/models.hpp"
#include "hypegt/pe.hpp"
#include "hypegt/rng.hpp"
#include "hypegt/tensor.hpp"
#include "hypegt/text.hpp"
#include "hypegt/training.hpp"

using namespace hypegt;

namespace {

std::string g3(double v) {
    std::ostringstream ss;
    ss.precision(3);
    ss << v;
    return ss.str();
}

Tensor random_matrix(Rng& rng, std::size_t n, std::size_t k, double scale) {
    Tensor t(n, k);
    for (double& v : t.data) v = rng.normal(0.0, scale);
    return t;
}

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

std::vector<std::size_t> random_perm(Rng& rng, std::size_t n) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    return perm;
}

Tensor permute_rows(const Tensor& x, const std::vector<std::size_t>& perm) {
    Tensor out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c)
            out.at(perm[r], c) = x.at(r, c);
    return out;
}

Graph permuted_graph(const Graph& g, const std::vector<std::size_t>& perm) {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (auto [u, v] : g.edge_list()) edges.emplace_back(perm[u], perm[v]);
    return Graph::build(g.n, edges);
}

// ---------------------------------------------------------------------------
// Geometry: exp/log roundtrips, Mobius axioms, encoder outputs on-manifold.
bool crit_geometry(std::string& detail) {
    Rng rng(2024);
    double worst_round = 0.0;
    for (ManifoldKind kind : {ManifoldKind::Hyperboloid, ManifoldKind::PoincareBall}) {
        for (double c : {0.5, 1.0, 2.0}) {
            ManifoldSpec spec{kind, c};
            Tensor v = bounded_tangents(rng, 100, 6, 3.0);
            Tensor x = exp_origin(spec, tangent_project(spec, v));
            Tensor back = tangent_spatial(spec, log_origin(spec, x));
            worst_round = std::max(worst_round, max_diff(back, v));
        }
    }

    double worst_mobius = 0.0;
    for (double c : {0.5, 1.0, 2.0}) {
        ManifoldSpec ball{ManifoldKind::PoincareBall, c};
        Tensor pts = exp_origin(ball, bounded_tangents(rng, 100, 5, 2.0));
        Tensor zero = Tensor::zeros(100, 5);
        worst_mobius =
            std::max(worst_mobius, max_diff(mobius_add(ball, zero, pts), pts));
        worst_mobius =
            std::max(worst_mobius, max_abs(mobius_add(ball, scalar_mul(pts, -1.0), pts)));
    }

    SBMParams sp;
    sp.n = 24;
    sp.blocks = 2;
    sp.p_in = 0.5;
    sp.p_out = 0.08;
    sp.feature_dim = 3;
    Graph g = sbm_generate(sp, 1);
    double worst_encoder = 0.0;
    for (int cat = 1; cat <= 8; ++cat) {
        for (double c : {0.5, 1.0, 2.0}) {
            PEConfig cfg;
            cfg.category = cat;
            cfg.init_dim = 4;
            cfg.k = 5;
            cfg.layers = 2;
            cfg.curvature = c;
            PEEncoderParams params = PEEncoderParams::init(cfg, Rng(40 + cat));
            HBatch pe = generate_pe(g, cfg, params);
            worst_encoder =
                std::max(worst_encoder, manifold_max_violation(pe.spec, pe.points));
        }
    }

    detail = "roundtrip=" + g3(worst_round) + " tol 1e-8, mobius=" + g3(worst_mobius) +
             " tol 1e-12, encoder_on_manifold=" + g3(worst_encoder) + " tol 1e-8";
    return std::isfinite(worst_round) && worst_round <= 1e-8 &&
           std::isfinite(worst_mobius) && worst_mobius <= 1e-12 &&
           std::isfinite(worst_encoder) && worst_encoder <= 1e-8;
}

// ---------------------------------------------------------------------------
// Oracles: rw_pe vs dense powers, auroc vs pairwise counting, lap_pe algebra.
bool crit_oracles(std::string& detail) {
    Rng rng(7);
    double worst_rw = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = 8 + rng.uniform_index(57);  // 8..64
        std::size_t k = 1 + rng.uniform_index(8);   // 1..8
        Graph g = random_connected_graph(rng, n, 0.08);
        Tensor enc = rw_pe(g, k);
        NoTape guard;
        Tensor dense = rw_matrix(g).to_dense();
        Tensor power = Tensor::identity(g.n);
        for (std::size_t s = 1; s <= k; ++s) {
            power = matmul(dense, power);
            for (std::size_t u = 0; u < g.n; ++u)
                worst_rw =
                    std::max(worst_rw, std::abs(enc.at(u, s - 1) - power.at(u, u)));
        }
    }

    std::size_t auroc_mismatches = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t m = 10 + rng.uniform_index(40);
        Tensor logits(m, 2);
        std::vector<int> labels(m);
        std::vector<std::uint8_t> mask(m, 1);
        std::vector<double> scores(m);
        for (std::size_t i = 0; i < m; ++i) {
            double s = std::floor(rng.uniform(-2.0, 2.0) * 4.0) / 4.0;  // force ties
            logits.at(i, 1) = s;
            scores[i] = s;
            labels[i] = rng.uniform() < 0.4 ? 1 : 0;
        }
        labels[0] = 0;
        labels[1] = 1;
        double wins = 0.0;
        std::size_t pairs = 0;
        for (std::size_t i = 0; i < m; ++i) {
            if (labels[i] != 1) continue;
            for (std::size_t j = 0; j < m; ++j) {
                if (labels[j] != 0) continue;
                ++pairs;
                if (scores[i] > scores[j])
                    wins += 1.0;
                else if (scores[i] == scores[j])
                    wins += 0.5;
            }
        }
        double oracle = wins / static_cast<double>(pairs);
        if (auroc(logits, labels, mask) != oracle) ++auroc_mismatches;
    }

    double worst_residual = 0.0, worst_gram = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        std::size_t n = 12 + rng.uniform_index(21);  // 12..32
        std::size_t k = 1 + rng.uniform_index(8);
        Graph g = random_connected_graph(rng, n, 0.2);
        Tensor u = lap_pe(g, k);
        NoTape guard;
        Tensor lap = laplacian_dense(g, LaplacianKind::SymNormalized);
        Tensor lu = matmul(lap, u);
        for (std::size_t j = 0; j < k; ++j) {
            double num = 0.0, den = 0.0;
            for (std::size_t r = 0; r < g.n; ++r) {
                num += u.at(r, j) * lu.at(r, j);
                den += u.at(r, j) * u.at(r, j);
            }
            double lambda = num / den;
            for (std::size_t r = 0; r < g.n; ++r)
                worst_residual = std::max(worst_residual,
                                          std::abs(lu.at(r, j) - lambda * u.at(r, j)));
        }
        worst_gram = std::max(
            worst_gram, max_diff(matmul(transpose(u), u), Tensor::identity(k)));
    }

    detail = "rw_vs_dense=" + g3(worst_rw) + " tol 1e-12 (50 graphs), auroc_mismatch=" +
             std::to_string(auroc_mismatches) + "/100 exact, lap_residual=" +
             g3(worst_residual) + " gram=" + g3(worst_gram) + " tol 1e-8";
    return std::isfinite(worst_rw) && worst_rw <= 1e-12 && auroc_mismatches == 0 &&
           std::isfinite(worst_residual) && worst_residual <= 1e-8 &&
           std::isfinite(worst_gram) && worst_gram <= 1e-8;
}

// ---------------------------------------------------------------------------
// Gradients: central differences against the tape through every layer type,
// five seeded points each.
bool crit_gradients(std::string& detail) {
    const double tol = 1e-4;
    std::map<std::string, double> worst;
    auto record = [&](const std::string& name, double err) {
        worst[name] = std::max(worst[name], err);
    };

    for (int point = 0; point < 5; ++point) {
        Rng rng(900 + point);
        PEConfig cfg;
        cfg.init_dim = 3;
        cfg.k = 3;
        cfg.layers = 2;
        PEEncoderParams params = PEEncoderParams::init(cfg, Rng(950 + point));
        ManifoldSpec hyp{ManifoldKind::Hyperboloid, 1.0};
        ManifoldSpec ball{ManifoldKind::PoincareBall, 1.0};
        Tensor p_hat = random_matrix(rng, 4, 3, 0.4);

        record("hnn", grad_check(
                          [&](const Tensor& t) {
                              return sum(hnn_forward(t, params, hyp).points);
                          },
                          p_hat));
        record("hnn", grad_check(
                          [&](const Tensor& t) {
                              return sum(hnn_forward(t, params, ball).points);
                          },
                          p_hat));

        Graph ring = Graph::build(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
        auto ghat = gcn_norm(ring);
        record("hgcn", grad_check(
                           [&](const Tensor& t) {
                               return sum(hgcn_forward(t, ghat, params, ball).points);
                           },
                           p_hat));

        HBatch pe{ball, exp_origin(ball, bounded_tangents(rng, 4, 3, 1.0))};
        Tensor x = random_matrix(rng, 4, 3, 0.5);
        record("fuse_v1",
               grad_check([&](const Tensor& t) { return sum(fuse_v1(t, pe)); }, x));
        record("fuse_v2",
               grad_check([&](const Tensor& t) { return sum(fuse_v2(t, pe)); }, x));

        Tensor h = random_matrix(rng, 4, 4, 0.6);
        record("gt_layer",
               grad_check(
                   [&](const Tensor& t) {
                       GTLayerParams lp =
                           GTLayerParams::init(4, 2, Rng(970 + point), "l/");
                       NormKind norm =
                           point % 2 ? NormKind::LayerNorm : NormKind::BatchNorm;
                       return sum(gt_layer(t, lp, norm, true));
                   },
                   h));

        Tensor w = random_matrix(rng, 4, 4, 0.6);
        record("gcn_layer",
               grad_check(
                   [&](const Tensor& t) { return sum(gcn_layer(t, ghat, w)); }, h));

        Tensor h0 = random_matrix(rng, 4, 4, 0.6);
        record("gcnii_layer",
               grad_check(
                   [&](const Tensor& t) {
                       return sum(gcnii_layer(t, h0, ghat, w, 0.2, gcnii_beta(0.5, 2)));
                   },
                   h));

        std::vector<int> labels{0, 1, 0, 1};
        std::vector<std::uint8_t> mask{1, 1, 0, 1};
        record("cross_entropy",
               grad_check(
                   [&](const Tensor& t) { return cross_entropy(t, labels, mask); },
                   random_matrix(rng, 4, 2, 1.0)));
    }

    double overall = 0.0;
    bool ok = true;
    detail = "max_rel_err:";
    for (const auto& [name, err] : worst) {
        overall = std::max(overall, err);
        ok = ok && std::isfinite(err) && err <= tol;
        detail += " " + name + "=" + g3(err);
    }
    detail += ", tol 1e-4, 5 points each";
    return ok && std::isfinite(overall);
}

// ---------------------------------------------------------------------------
// Equivariance: gt_layer and hgcn_forward commute with node relabeling.
bool crit_equivariance(std::string& detail) {
    Rng rng(11);
    double worst_gt = 0.0, worst_hgcn = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t n = 8 + rng.uniform_index(25);  // 8..32
        std::vector<std::size_t> perm = random_perm(rng, n);

        Tensor x = random_matrix(rng, n, 6, 0.8);
        GTLayerParams lp = GTLayerParams::init(6, 2, Rng(600 + trial), "l/");
        NormKind norm = trial % 2 ? NormKind::LayerNorm : NormKind::BatchNorm;
        Tensor direct = gt_layer(permute_rows(x, perm), lp, norm, true);
        Tensor routed = permute_rows(gt_layer(x, lp, norm, true), perm);
        worst_gt = std::max(worst_gt, max_diff(direct, routed));

        Graph g = random_connected_graph(rng, n, 0.15);
        Graph pg = permuted_graph(g, perm);
        PEConfig cfg;
        cfg.init_dim = 4;
        cfg.k = 4;
        cfg.layers = 2;
        PEEncoderParams params = PEEncoderParams::init(cfg, Rng(700 + trial));
        ManifoldSpec spec = trial % 2
                                ? ManifoldSpec{ManifoldKind::Hyperboloid, 1.0}
                                : ManifoldSpec{ManifoldKind::PoincareBall, 1.0};
        Tensor p_hat = random_matrix(rng, n, 4, 0.4);
        Tensor direct_pe =
            hgcn_forward(permute_rows(p_hat, perm), gcn_norm(pg), params, spec).points;
        Tensor routed_pe =
            permute_rows(hgcn_forward(p_hat, gcn_norm(g), params, spec).points, perm);
        worst_hgcn = std::max(worst_hgcn, max_diff(direct_pe, routed_pe));
    }
    detail = "gt_layer=" + g3(worst_gt) + ", hgcn=" + g3(worst_hgcn) +
             ", tol 1e-10, 20 permutations";
    return std::isfinite(worst_gt) && worst_gt <= 1e-10 && std::isfinite(worst_hgcn) &&
           worst_hgcn <= 1e-10;
}

// ---------------------------------------------------------------------------
// Over-smoothing trend: deep plain GCN collapses to the majority class while
// injected encodings keep accuracy and Dirichlet energy up.
bool crit_oversmoothing(std::string& detail) {
    OversmoothConfig oc;  // defaults encode the full protocol
    std::vector<OversmoothRow> rows = run_oversmoothing(oc);
    auto find = [&](std::size_t depth, const std::string& variant,
                    std::uint64_t seed) -> const OversmoothRow& {
        for (const OversmoothRow& r : rows)
            if (r.depth == depth && r.variant == variant && r.seed == seed) return r;
        throw ContractError("missing sweep row");
    };

    double plain32_mean = 0.0, majority_mean = 0.0;
    for (std::uint64_t seed : oc.seeds) {
        plain32_mean += find(32, "plain", seed).test_acc;
        Graph g = sbm_generate(oc.sbm, seed);
        majority_mean += majority_fraction(g, g.test_mask);
    }
    plain32_mean /= static_cast<double>(oc.seeds.size());
    majority_mean /= static_cast<double>(oc.seeds.size());
    double gap = std::abs(plain32_mean - majority_mean);
    bool a_ok = gap <= 0.05;

    std::size_t min_wins = oc.seeds.size();
    for (std::size_t depth : {std::size_t{8}, std::size_t{16}, std::size_t{32}}) {
        std::size_t wins = 0;
        for (std::uint64_t seed : oc.seeds) {
            double best = std::max(find(depth, "cat3", seed).test_acc,
                                   find(depth, "cat4", seed).test_acc);
            if (best > find(depth, "plain", seed).test_acc) ++wins;
        }
        min_wins = std::min(min_wins, wins);
    }
    bool b_ok = min_wins >= 3;

    double min_margin = std::numeric_limits<double>::infinity();
    for (std::uint64_t seed : oc.seeds) {
        double plain_energy = find(32, "plain", seed).final_energy;
        for (const char* variant : {"cat3", "cat4"}) {
            min_margin = std::min(
                min_margin, find(32, variant, seed).final_energy - plain_energy);
        }
    }
    bool c_ok = min_margin > 0.0;

    detail = "a: plain32=" + g3(plain32_mean) + " vs majority=" + g3(majority_mean) +
             " gap=" + g3(gap) + "<=0.05 " + (a_ok ? "ok" : "FAIL") +
             "; b: min_wins=" + std::to_string(min_wins) + "/4>=3 " +
             (b_ok ? "ok" : "FAIL") + "; c: min_energy_margin=" + g3(min_margin) +
             ">0 " + (c_ok ? "ok" : "FAIL");
    return a_ok && b_ok && c_ok;
}

// ---------------------------------------------------------------------------
// Transformer sanity: both fusion strategies fit an n=500 toy within budget.
bool crit_gt_sanity(std::string& detail) {
    SBMParams sp;
    sp.n = 500;
    sp.blocks = 2;
    sp.p_in = 0.1;
    sp.p_out = 0.01;
    sp.feature_dim = 2;
    Graph g = sbm_generate(sp, 0);

    detail = "";
    bool ok = true;
    std::uint64_t model_seed = 1;
    for (FuseStrategy strategy : {FuseStrategy::V1, FuseStrategy::V2}) {
        ModelConfig mc;
        mc.kind = ModelKind::GT;
        mc.in_dim = g.features.cols();
        mc.hidden = 80;
        mc.num_layers = 4;
        mc.num_classes = g.num_classes;
        mc.heads = 8;
        mc.use_pe = true;
        mc.pe.category = 8;
        mc.pe.init_dim = 8;
        mc.pe.k = 8;
        mc.pe.layers = 2;
        mc.pe.curvature = 1.0;
        mc.fuse = strategy;
        auto model = make_model(mc, model_seed++);

        TrainConfig tc;
        tc.epochs = 300;
        tc.adam.lr = 0.005;
        tc.target_train_acc = 0.9;
        TrainResult result = train_loop(*model, g, tc);

        double best_train = 0.0;
        for (const EpochRecord& r : result.records)
            best_train = std::max(best_train, r.train_acc);
        ok = ok && best_train >= 0.9;
        if (!detail.empty()) detail += ", ";
        detail += std::string(strategy == FuseStrategy::V1 ? "v1" : "v2") +
                  "_train_acc=" + g3(best_train) + " in " +
                  std::to_string(result.epochs_run) + " epochs";
    }
    detail += ", target 0.9 within 300";
    return ok;
}

// ---------------------------------------------------------------------------
// Encoder depth sweep: the pe-layers mode emits one well-formed row per L.
bool crit_encoder_depth(std::string& detail) {
    const std::string cfg_path = "/tmp/hypegt_acc_enc.cfg";
    const std::string csv_path = "/tmp/hypegt_acc_enc.csv";
    {
        std::ofstream cfg(cfg_path);
        cfg << "mode = pe-layers\nn = 120\nblocks = 2\np_in = 0.3\np_out = 0.05\n"
               "feature_dim = 2\ndepth = 2\npe_layers_list = 1,2,3,4,5\nseeds = 1\n"
               "category = 3\nhidden = 12\nepochs = 30\nthreads = 1\n";
    }
    std::ostringstream out, err;
    int code = run_cli({"oversmooth", "--config", cfg_path, "--out", csv_path}, out, err);
    if (code != 0) {
        detail = "exit code " + std::to_string(code) + ": " + err.str();
        return false;
    }
    std::vector<std::string> lines = read_lines(csv_path);
    bool ok = lines.size() == 6 &&
              lines[0] == "pe_layers,category,strategy,test_acc_mean,test_acc_std,energy";
    std::size_t well_formed = 0;
    for (std::size_t l = 1; ok && l < lines.size(); ++l) {
        std::vector<std::string> fields;
        std::string item;
        for (char ch : lines[l] + ",") {
            if (ch == ',') {
                fields.push_back(item);
                item.clear();
            } else {
                item += ch;
            }
        }
        if (fields.size() != 6 || fields[0] != std::to_string(l) || fields[1] != "3" ||
            fields[2] != "v1") {
            ok = false;
            break;
        }
        for (std::size_t f = 3; f < 6; ++f)
            if (!std::isfinite(parse_double(fields[f]))) ok = false;
        if (ok) ++well_formed;
    }
    detail = "rows=" + std::to_string(well_formed) + "/5 for L=1..5, header " +
             (ok ? "ok" : "mismatch");
    return ok && well_formed == 5;
}

// ---------------------------------------------------------------------------
// Determinism: every command repeated with fixed seeds is byte-identical.
struct Capture {
    int code = -1;
    std::string out, err;
    std::vector<std::string> files;
};

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    if (!f) return "<missing " + path + ">";
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Capture invoke(const std::vector<std::string>& args,
               const std::vector<std::string>& outputs) {
    std::ostringstream out, err;
    Capture c;
    c.code = run_cli(args, out, err);
    c.out = out.str();
    c.err = err.str();
    for (const std::string& path : outputs) c.files.push_back(slurp(path));
    return c;
}

bool crit_determinism(std::string& detail) {
    const std::string dir = "/tmp/hypegt_acc_";
    std::ofstream(dir + "graph.cfg")
        << "n = 60\nblocks = 2\np_in = 0.3\np_out = 0.05\nfeature_dim = 3\n";
    std::ofstream(dir + "pe.cfg") << "category = 4\nk = 6\ninit_dim = 5\n";
    std::ofstream(dir + "train.cfg")
        << "model = hype-gt\nhidden = 8\nlayers = 1\nheads = 2\nepochs = 3\n"
           "pe_category = 6\npe_init_dim = 4\npe_k = 8\n";
    std::ofstream(dir + "os.cfg")
        << "n = 40\nblocks = 2\np_in = 0.4\np_out = 0.05\nfeature_dim = 2\n"
           "depths = 2\nseeds = 2\ncategories = 3\nhidden = 8\nepochs = 2\n"
           "threads = 2\n";

    struct Command {
        std::string name;
        std::vector<std::string> args;
        std::vector<std::string> outputs;
    };
    std::vector<Command> commands = {
        {"gen-graph",
         {"gen-graph", "--config", dir + "graph.cfg", "--out", dir + "graph.txt",
          "--seed", "9"},
         {dir + "graph.txt"}},
        {"gen-pe",
         {"gen-pe", "--config", dir + "pe.cfg", "--graph", dir + "graph.txt", "--out",
          dir + "pe.txt", "--seed", "2"},
         {dir + "pe.txt"}},
        {"train",
         {"train", "--config", dir + "train.cfg", "--graph", dir + "graph.txt",
          "--seeds", "3,4", "--out", dir + "metrics.jsonl", "--checkpoint",
          dir + "model.ckpt"},
         {dir + "metrics.jsonl", dir + "model.ckpt"}},
        {"verify", {"verify", "manifolds", "--seed", "5"}, {}},
        {"oversmooth",
         {"oversmooth", "--config", dir + "os.cfg", "--out", dir + "os.csv"},
         {dir + "os.csv"}},
    };

    detail = "";
    bool ok = true;
    for (const Command& cmd : commands) {
        Capture first = invoke(cmd.args, cmd.outputs);
        Capture second = invoke(cmd.args, cmd.outputs);
        bool same = first.code == 0 && second.code == 0 && first.out == second.out &&
                    first.err == second.err && first.files == second.files;
        ok = ok && same;
        if (!detail.empty()) detail += ", ";
        detail += cmd.name + (same ? "=identical" : "=DIVERGED");
    }
    return ok;
}

struct Criterion {
    std::string name;
    double budget_seconds;  // 0 means no stated budget
    std::function<bool(std::string&)> fn;
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<Criterion> criteria = {
        {"geometry", 5.0, crit_geometry},
        {"oracles", 30.0, crit_oracles},
        {"gradients", 120.0, crit_gradients},
        {"equivariance", 0.0, crit_equivariance},
        {"oversmoothing", 600.0, crit_oversmoothing},
        {"gt_sanity", 300.0, crit_gt_sanity},
        {"encoder_depth", 0.0, crit_encoder_depth},
        {"determinism", 0.0, crit_determinism},
    };

    std::vector<std::string> selected(argv + 1, argv + argc);
    if (!selected.empty()) {
        for (const std::string& name : selected) {
            bool known = false;
            for (const Criterion& c : criteria) known = known || c.name == name;
            if (!known) {
                std::cerr << "unknown criterion: " << name << "\n";
                return 2;
            }
        }
    }

    bool all_ok = true;
    for (const Criterion& c : criteria) {
        if (!selected.empty() &&
            std::find(selected.begin(), selected.end(), c.name) == selected.end())
            continue;
        std::string detail;
        bool ok = false;
        auto t0 = std::chrono::steady_clock::now();
        try {
            ok = c.fn(detail);
        } catch (const std::exception& e) {
            ok = false;
            detail = std::string("exception: ") + e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                          .count();
        if (c.budget_seconds > 0 && secs > c.budget_seconds) {
            ok = false;
            detail += ", over " + g3(c.budget_seconds) + "s budget";
        }
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << c.name << " (" << detail
                  << ", time=" << g3(secs) << "s)" << std::endl;
        all_ok = all_ok && ok;
    }
    return all_ok ? 0 : 1;
}
