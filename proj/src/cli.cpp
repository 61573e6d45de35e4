#include "hypegt/cli.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <set>

#include "hypegt/config.hpp"
#include "hypegt/errors.hpp"
#include "hypegt/experiments.hpp"
#include "hypegt/graph.hpp"
#include "hypegt/models.hpp"
#include "hypegt/pe.hpp"
#include "hypegt/text.hpp"
#include "hypegt/training.hpp"
#include "hypegt/verify.hpp"

namespace hypegt {

namespace {

const char* kUsage =
    "usage: hypegt <command> [options]\n"
    "\n"
    "commands:\n"
    "  gen-graph   --config FILE --out PATH [--seed N]\n"
    "              sample a stochastic block model graph and write it\n"
    "  gen-pe      --config FILE --graph PATH --out PATH [--seed N]\n"
    "              compute hyperbolic positional encodings for a graph file\n"
    "  train       --config FILE --graph PATH [--seed N | --seeds A,B,..]\n"
    "              [--runs K] [--out PATH] [--checkpoint PATH] [--load PATH]\n"
    "              train a model; prints one line per run plus a mean/std\n"
    "              aggregate; --out collects JSONL epoch metrics\n"
    "  verify      [suite] [--seed N]\n"
    "              run property checks (manifolds, pe, grads, models,\n"
    "              metrics, all); exits 1 when a property fails\n"
    "  oversmooth  [--config FILE] [--out PATH]\n"
    "              depth sweep (mode=depth) or encoder-layer sweep\n"
    "              (mode=pe-layers) reporting accuracy and Dirichlet energy\n";

struct ParsedArgs {
    std::vector<std::string> positional;
    std::map<std::string, std::string> flags;
};

ParsedArgs parse_args(const std::vector<std::string>& args,
                      const std::set<std::string>& allowed) {
    ParsedArgs parsed;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& arg = args[i];
        if (arg.rfind("--", 0) == 0) {
            if (allowed.count(arg) == 0)
                throw ConfigError("unknown option " + arg);
            if (i + 1 >= args.size())
                throw ConfigError("option " + arg + " needs a value");
            if (!parsed.flags.emplace(arg, args[i + 1]).second)
                throw ConfigError("option " + arg + " given twice");
            ++i;
        } else {
            parsed.positional.push_back(arg);
        }
    }
    return parsed;
}

std::string require_flag(const ParsedArgs& args, const std::string& name) {
    auto it = args.flags.find(name);
    if (it == args.flags.end()) throw ConfigError("missing required option " + name);
    return it->second;
}

std::string optional_flag(const ParsedArgs& args, const std::string& name,
                          const std::string& fallback) {
    auto it = args.flags.find(name);
    return it == args.flags.end() ? fallback : it->second;
}

long long_arg(const std::string& raw, const std::string& what) {
    try {
        return parse_long(raw);
    } catch (const IoError&) {
        throw ConfigError(what + " must be an integer: " + raw);
    }
}

std::uint64_t seed_flag(const ParsedArgs& args) {
    long v = long_arg(optional_flag(args, "--seed", "0"), "--seed");
    if (v < 0) throw ConfigError("--seed must be nonnegative");
    return static_cast<std::uint64_t>(v);
}

std::vector<long> parse_long_list(const std::string& raw, const std::string& what) {
    std::vector<long> values;
    std::string item;
    for (char ch : raw + ",") {
        if (ch == ',') {
            std::string tok = trim(item);
            if (!tok.empty()) values.push_back(long_arg(tok, what));
            item.clear();
        } else {
            item += ch;
        }
    }
    if (values.empty()) throw ConfigError(what + " must be a nonempty list");
    return values;
}

std::size_t positive_size(const KVConfig& cfg, const std::string& key, long fallback) {
    long v = cfg.get_long(key, fallback);
    if (v < 1) throw ConfigError("config: key " + key + " must be positive");
    return static_cast<std::size_t>(v);
}

SBMParams sbm_from_config(const KVConfig& cfg, long feature_dim_fallback = 2) {
    SBMParams sp;
    sp.n = positive_size(cfg, "n", 300);
    sp.blocks = positive_size(cfg, "blocks", 2);
    sp.p_in = cfg.get_double("p_in", 0.1);
    sp.p_out = cfg.get_double("p_out", 0.01);
    sp.feature_dim = positive_size(cfg, "feature_dim", feature_dim_fallback);
    sp.label_noise = cfg.get_double("label_noise", 0.0);
    sp.jitter_sigma = cfg.get_double("jitter_sigma", 0.1);
    return sp;
}

LaplacianKind laplacian_from_config(const KVConfig& cfg, const std::string& key) {
    std::string name = cfg.get_string(key, "normalized");
    if (name == "normalized") return LaplacianKind::SymNormalized;
    if (name == "unnormalized") return LaplacianKind::Unnormalized;
    throw ConfigError("config: " + key + " must be normalized or unnormalized");
}

PEConfig pe_from_config(const KVConfig& cfg, const std::string& prefix,
                        std::size_t default_k) {
    PEConfig pe;
    pe.category = static_cast<int>(cfg.get_long(prefix + "category", 1));
    pe.init_dim = positive_size(cfg, prefix + "init_dim", 8);
    pe.k = positive_size(cfg, prefix + "k", static_cast<long>(default_k));
    pe.hidden = static_cast<std::size_t>(cfg.get_long(prefix + "hidden", 0));
    pe.layers = positive_size(cfg, prefix + "layers", 2);
    pe.curvature = cfg.get_double(prefix + "curvature", 1.0);
    pe.lap_kind = laplacian_from_config(cfg, prefix + "laplacian");
    return pe;
}

FuseStrategy strategy_from_name(const std::string& name) {
    if (name == "v1") return FuseStrategy::V1;
    if (name == "v2") return FuseStrategy::V2;
    throw ConfigError("config: strategy must be v1 or v2");
}

const char* strategy_name(FuseStrategy s) {
    return s == FuseStrategy::V1 ? "v1" : "v2";
}

InjectionPoint injection_from_config(const KVConfig& cfg) {
    std::string name = cfg.get_string("injection", "every");
    if (name == "every") return InjectionPoint::EveryLayer;
    if (name == "final") return InjectionPoint::FinalLayerOnly;
    throw ConfigError("config: injection must be every or final");
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& values) {
    MeanStd out;
    if (values.empty()) return out;
    for (double v : values) out.mean += v;
    out.mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size()));
    return out;
}

int cmd_gen_graph(const ParsedArgs& args, std::ostream& out) {
    KVConfig cfg = KVConfig::from_file(require_flag(args, "--config"));
    SBMParams sp = sbm_from_config(cfg);
    cfg.ensure_consumed();
    Graph g = sbm_generate(sp, seed_flag(args));
    std::string path = require_flag(args, "--out");
    save_graph(g, path);
    out << "graph n=" << g.n << " edges=" << g.num_edges() << " classes="
        << g.num_classes << " -> " << path << "\n";
    return 0;
}

int cmd_gen_pe(const ParsedArgs& args, std::ostream& out) {
    KVConfig cfg = KVConfig::from_file(require_flag(args, "--config"));
    PEConfig pe = pe_from_config(cfg, "", 8);
    cfg.ensure_consumed();
    validate_pe_config(pe);
    Graph g = load_graph(require_flag(args, "--graph"));
    PEEncoderParams params = PEEncoderParams::init(pe, Rng(seed_flag(args)));
    HBatch batch = generate_pe(g, pe, params);
    std::string path = require_flag(args, "--out");
    save_pe(batch, pe.category, path);
    const PECategory& cat = resolve_category(pe.category);
    out << "pe category=" << pe.category << " init=" << pe_init_name(cat.init)
        << " manifold=" << manifold_name(cat.manifold)
        << " network=" << net_kind_name(cat.network) << " n=" << g.n << " k=" << pe.k
        << " -> " << path << "\n";
    return 0;
}

int cmd_train(const ParsedArgs& args, std::ostream& out) {
    KVConfig cfg = KVConfig::from_file(require_flag(args, "--config"));
    Graph g = load_graph(require_flag(args, "--graph"));

    ModelConfig mc;
    std::string model_name = cfg.get_string("model", "hype-gt");
    bool forced_v2 = false;
    if (model_name == "hype-gt") {
        mc.kind = ModelKind::GT;
    } else if (model_name == "hype-gtv2") {
        mc.kind = ModelKind::GT;
        forced_v2 = true;
    } else if (model_name == "gcn" || model_name == "jknet" || model_name == "gcnii") {
        mc.kind = model_kind_from_name(model_name);
    } else {
        throw ConfigError(
            "config: model must be hype-gt, hype-gtv2, gcn, jknet or gcnii");
    }
    mc.in_dim = g.features.cols();
    mc.hidden = positive_size(cfg, "hidden", 16);
    mc.num_layers = positive_size(cfg, "layers", 2);
    mc.num_classes = g.num_classes;
    mc.heads = positive_size(cfg, "heads", 4);
    std::string norm = cfg.get_string("norm", "batch");
    if (norm == "batch")
        mc.norm = NormKind::BatchNorm;
    else if (norm == "layer")
        mc.norm = NormKind::LayerNorm;
    else
        throw ConfigError("config: norm must be batch or layer");
    mc.gcnii_alpha = cfg.get_double("gcnii_alpha", 0.1);
    mc.gcnii_lambda = cfg.get_double("gcnii_lambda", 0.5);
    mc.use_pe = cfg.get_bool("use_pe", mc.kind == ModelKind::GT);
    if (mc.use_pe) mc.pe = pe_from_config(cfg, "pe_", mc.hidden);
    std::string strat = cfg.get_string("strategy", forced_v2 ? "v2" : "v1");
    if (forced_v2 && strat != "v2")
        throw ConfigError("config: model hype-gtv2 fixes strategy = v2");
    mc.fuse = strategy_from_name(strat);
    mc.injection = injection_from_config(cfg);

    TrainConfig tc;
    tc.epochs = positive_size(cfg, "epochs", 200);
    tc.adam.lr = cfg.get_double("lr", 0.01);
    tc.adam.weight_decay = cfg.get_double("weight_decay", 0.0);
    tc.lr_factor = cfg.get_double("lr_factor", 0.5);
    tc.lr_patience = positive_size(cfg, "lr_patience", 10);
    tc.lr_floor = cfg.get_double("lr_floor", 1e-6);
    tc.target_train_acc = cfg.get_double("target_train_acc", 0.0);
    tc.record_energy = cfg.get_bool("record_energy", false);
    cfg.ensure_consumed();
    validate_model_config(mc);

    std::vector<std::uint64_t> seeds;
    auto seeds_it = args.flags.find("--seeds");
    if (seeds_it != args.flags.end()) {
        if (args.flags.count("--seed"))
            throw ConfigError("give either --seed or --seeds, not both");
        for (long v : parse_long_list(seeds_it->second, "--seeds")) {
            if (v < 0) throw ConfigError("--seeds entries must be nonnegative");
            seeds.push_back(static_cast<std::uint64_t>(v));
        }
        auto runs_it = args.flags.find("--runs");
        if (runs_it != args.flags.end() &&
            long_arg(runs_it->second, "--runs") != static_cast<long>(seeds.size()))
            throw ConfigError("--runs disagrees with the --seeds list length");
    } else {
        long runs = long_arg(optional_flag(args, "--runs", "1"), "--runs");
        if (runs < 1) throw ConfigError("--runs must be positive");
        std::uint64_t base = seed_flag(args);
        for (long r = 0; r < runs; ++r)
            seeds.push_back(base + static_cast<std::uint64_t>(r));
    }

    auto load_it = args.flags.find("--load");
    if (load_it != args.flags.end() && seeds.size() > 1)
        throw ConfigError("--load applies to a single run only");

    std::ofstream metrics_file;
    std::ostream* metrics = nullptr;
    auto metrics_path = args.flags.find("--out");
    if (metrics_path != args.flags.end()) {
        metrics_file.open(metrics_path->second);
        if (!metrics_file)
            throw IoError("cannot open " + metrics_path->second + " for writing");
        metrics = &metrics_file;
    }

    std::unique_ptr<Model> model;
    std::vector<double> train_accs, val_accs, test_accs;
    for (std::size_t r = 0; r < seeds.size(); ++r) {
        tc.run_id = r;
        model = make_model(mc, seeds[r]);
        if (load_it != args.flags.end()) load_checkpoint(*model, load_it->second);
        TrainResult result = train_loop(*model, g, tc, metrics);
        train_accs.push_back(result.final_train_acc);
        val_accs.push_back(result.best_val_acc);
        test_accs.push_back(result.test_acc_at_best);
        out << "run " << r << ": seed=" << seeds[r] << " epochs=" << result.epochs_run
            << " best_epoch=" << result.best_epoch
            << " train_acc=" << fmt_double(result.final_train_acc)
            << " val_acc=" << fmt_double(result.best_val_acc)
            << " test_acc=" << fmt_double(result.test_acc_at_best) << "\n";
    }
    MeanStd tr = mean_std(train_accs), va = mean_std(val_accs), te = mean_std(test_accs);
    out << "aggregate runs=" << seeds.size() << " train_acc_mean=" << fmt_double(tr.mean)
        << " train_acc_std=" << fmt_double(tr.std)
        << " val_acc_mean=" << fmt_double(va.mean)
        << " val_acc_std=" << fmt_double(va.std)
        << " test_acc_mean=" << fmt_double(te.mean)
        << " test_acc_std=" << fmt_double(te.std) << "\n";

    auto ckpt_it = args.flags.find("--checkpoint");
    if (ckpt_it != args.flags.end()) {
        save_checkpoint(*model, ckpt_it->second);
        out << "checkpoint (last run) -> " << ckpt_it->second << "\n";
    }
    return 0;
}

int cmd_verify(const ParsedArgs& args, std::ostream& out) {
    std::string suite = args.positional.empty() ? "all" : args.positional[0];
    std::uint64_t seed = seed_flag(args);
    std::vector<PropertyResult> results;
    if (suite == "manifolds")
        results = verify_manifolds(seed);
    else if (suite == "pe")
        results = verify_pe(seed);
    else if (suite == "grads" || suite == "gradients")
        results = verify_gradients(seed);
    else if (suite == "models")
        results = verify_models(seed);
    else if (suite == "metrics")
        results = verify_metrics(seed);
    else if (suite == "all")
        results = verify_all(seed);
    else
        throw ConfigError("unknown verify suite: " + suite);
    print_results(results, out);
    std::size_t failed = 0;
    for (const PropertyResult& r : results) failed += r.pass ? 0 : 1;
    out << results.size() - failed << "/" << results.size() << " properties passed\n";
    return all_pass(results) ? 0 : 1;
}

std::vector<std::uint64_t> seed_range(const KVConfig& cfg, long fallback) {
    long count = cfg.get_long("seeds", fallback);
    if (count < 1) throw ConfigError("config: seeds must be positive");
    std::vector<std::uint64_t> seeds;
    for (long s = 0; s < count; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
    return seeds;
}

// Seed-aggregated CSV row over the result rows matching `variant`.
std::string csv_row(const std::vector<OversmoothRow>& rows, std::size_t lead,
                    const std::string& variant, const std::string& category,
                    const std::string& strategy) {
    std::vector<double> accs, energies;
    for (const OversmoothRow& row : rows) {
        if (row.variant != variant) continue;
        accs.push_back(row.test_acc);
        energies.push_back(row.final_energy);
    }
    if (accs.empty()) throw ContractError("sweep produced no rows for " + variant);
    MeanStd acc = mean_std(accs), energy = mean_std(energies);
    return std::to_string(lead) + "," + category + "," + strategy + "," +
           fmt_double(acc.mean) + "," + fmt_double(acc.std) + "," +
           fmt_double(energy.mean);
}

int cmd_oversmooth(const ParsedArgs& args, std::ostream& out) {
    KVConfig cfg;
    auto config_path = args.flags.find("--config");
    if (config_path != args.flags.end()) cfg = KVConfig::from_file(config_path->second);

    std::string mode = cfg.get_string("mode", "depth");
    if (mode != "depth" && mode != "pe-layers")
        throw ConfigError("config: mode must be depth or pe-layers");

    std::vector<OversmoothRow> rows;
    std::vector<std::string> csv;
    std::string footer;
    if (mode == "depth") {
        OversmoothConfig oc;
        oc.sbm = sbm_from_config(cfg, 1);
        oc.depths.clear();
        for (long d : parse_long_list(cfg.get_string("depths", "8,16,32"), "depths")) {
            if (d < 1) throw ConfigError("config: depths must be positive");
            oc.depths.push_back(static_cast<std::size_t>(d));
        }
        oc.seeds = seed_range(cfg, 4);
        oc.categories.clear();
        for (long c : parse_long_list(cfg.get_string("categories", "3,4"), "categories"))
            oc.categories.push_back(static_cast<int>(c));
        oc.kind = model_kind_from_name(cfg.get_string("model", "gcn"));
        oc.hidden = positive_size(cfg, "hidden", 16);
        oc.epochs = positive_size(cfg, "epochs", 200);
        oc.lr = cfg.get_double("lr", 0.01);
        oc.weight_decay = cfg.get_double("weight_decay", 5e-4);
        oc.fuse = strategy_from_name(cfg.get_string("strategy", "v1"));
        oc.injection = injection_from_config(cfg);
        oc.pe_init_dim = positive_size(cfg, "pe_init_dim", 8);
        oc.pe_layers = positive_size(cfg, "pe_layers", 2);
        oc.pe_curvature = cfg.get_double("pe_curvature", 1.0);
        long threads = cfg.get_long("threads", 0);
        if (threads < 0) throw ConfigError("config: threads must be nonnegative");
        oc.threads = static_cast<std::size_t>(threads);
        cfg.ensure_consumed();

        rows = run_oversmoothing(oc);
        csv.push_back("depth,category,strategy,test_acc_mean,test_acc_std,energy");
        for (std::size_t depth : oc.depths) {
            std::vector<OversmoothRow> at_depth;
            for (const OversmoothRow& row : rows)
                if (row.depth == depth) at_depth.push_back(row);
            csv.push_back(csv_row(at_depth, depth, "plain", "none", "none"));
            for (int cat : oc.categories)
                csv.push_back(csv_row(at_depth, depth, "cat" + std::to_string(cat),
                                      std::to_string(cat), strategy_name(oc.fuse)));
        }
        Graph sample = sbm_generate(oc.sbm, oc.seeds.front());
        footer = "majority_test_fraction=" +
                 fmt_double(majority_fraction(sample, sample.test_mask));
    } else {
        EncoderSweepConfig ec;
        ec.sbm = sbm_from_config(cfg, 1);
        ec.depth = positive_size(cfg, "depth", 4);
        ec.encoder_layers.clear();
        for (long l : parse_long_list(cfg.get_string("pe_layers_list", "1,2,3,4,5"),
                                      "pe_layers_list")) {
            if (l < 1) throw ConfigError("config: pe_layers_list must be positive");
            ec.encoder_layers.push_back(static_cast<std::size_t>(l));
        }
        ec.seeds = seed_range(cfg, 1);
        ec.category = static_cast<int>(cfg.get_long("category", 3));
        ec.kind = model_kind_from_name(cfg.get_string("model", "gcn"));
        ec.hidden = positive_size(cfg, "hidden", 16);
        ec.epochs = positive_size(cfg, "epochs", 200);
        ec.lr = cfg.get_double("lr", 0.01);
        ec.weight_decay = cfg.get_double("weight_decay", 5e-4);
        ec.fuse = strategy_from_name(cfg.get_string("strategy", "v1"));
        ec.injection = injection_from_config(cfg);
        ec.pe_init_dim = positive_size(cfg, "pe_init_dim", 8);
        ec.pe_curvature = cfg.get_double("pe_curvature", 1.0);
        long threads = cfg.get_long("threads", 0);
        if (threads < 0) throw ConfigError("config: threads must be nonnegative");
        ec.threads = static_cast<std::size_t>(threads);
        cfg.ensure_consumed();

        rows = run_encoder_sweep(ec);
        csv.push_back("pe_layers,category,strategy,test_acc_mean,test_acc_std,energy");
        for (std::size_t layers : ec.encoder_layers) {
            std::string variant =
                "cat" + std::to_string(ec.category) + "/enc" + std::to_string(layers);
            csv.push_back(csv_row(rows, layers, variant, std::to_string(ec.category),
                                  strategy_name(ec.fuse)));
        }
    }

    for (const OversmoothRow& row : rows) out << oversmooth_row_string(row) << "\n";
    for (const std::string& line : csv) out << line << "\n";
    if (!footer.empty()) out << footer << "\n";

    auto out_path = args.flags.find("--out");
    if (out_path != args.flags.end()) {
        std::ofstream file(out_path->second);
        if (!file) throw IoError("cannot open " + out_path->second + " for writing");
        for (const std::string& line : csv) file << line << "\n";
    }
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    if (args.empty()) {
        err << kUsage;
        return 2;
    }
    const std::string& command = args[0];
    std::vector<std::string> rest(args.begin() + 1, args.end());
    try {
        if (command == "gen-graph") {
            ParsedArgs parsed = parse_args(rest, {"--config", "--out", "--seed"});
            return cmd_gen_graph(parsed, out);
        }
        if (command == "gen-pe") {
            ParsedArgs parsed =
                parse_args(rest, {"--config", "--graph", "--out", "--seed"});
            return cmd_gen_pe(parsed, out);
        }
        if (command == "train") {
            ParsedArgs parsed =
                parse_args(rest, {"--config", "--graph", "--out", "--seed", "--seeds",
                                  "--runs", "--checkpoint", "--load"});
            return cmd_train(parsed, out);
        }
        if (command == "verify") {
            ParsedArgs parsed = parse_args(rest, {"--seed"});
            return cmd_verify(parsed, out);
        }
        if (command == "oversmooth") {
            ParsedArgs parsed = parse_args(rest, {"--config", "--out"});
            return cmd_oversmooth(parsed, out);
        }
        if (command == "help" || command == "--help" || command == "-h") {
            out << kUsage;
            return 0;
        }
        err << "unknown command: " << command << "\n" << kUsage;
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace hypegt
