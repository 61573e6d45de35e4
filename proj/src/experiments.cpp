#include "hypegt/experiments.hpp"

#include <atomic>
#include <cstdlib>
#include <functional>
#include <map>
#include <thread>

#include "hypegt/errors.hpp"
#include "hypegt/text.hpp"

namespace hypegt {

namespace {

struct Cell {
    std::size_t depth;
    std::string variant;
    int category;  // 0 for plain
    std::uint64_t seed;
};

OversmoothRow run_cell(const OversmoothConfig& cfg, const Cell& cell) {
    Graph g = sbm_generate(cfg.sbm, cell.seed);

    ModelConfig mc;
    mc.kind = cfg.kind;
    mc.in_dim = cfg.sbm.feature_dim;
    mc.hidden = cfg.hidden;
    mc.num_layers = cell.depth;
    mc.num_classes = g.num_classes;
    if (cell.category > 0) {
        mc.use_pe = true;
        mc.pe.category = cell.category;
        mc.pe.init_dim = cfg.pe_init_dim;
        mc.pe.k = cfg.hidden;
        mc.pe.layers = cfg.pe_layers;
        mc.pe.curvature = cfg.pe_curvature;
        mc.fuse = cfg.fuse;
        mc.injection = cfg.injection;
    }
    std::uint64_t model_seed =
        Rng(cell.seed)
            .stream("oversmooth/" + cell.variant + "/depth" + std::to_string(cell.depth))
            .next_u64();
    auto model = make_model(mc, model_seed);

    TrainConfig tc;
    tc.epochs = cfg.epochs;
    tc.adam.lr = cfg.lr;
    tc.adam.weight_decay = cfg.weight_decay;
    TrainResult result = train_loop(*model, g, tc);

    OversmoothRow row;
    row.depth = cell.depth;
    row.variant = cell.variant;
    row.encoder_layers = cell.category > 0 ? cfg.pe_layers : 0;
    row.seed = cell.seed;
    row.train_acc = result.records[result.best_epoch].train_acc;
    row.val_acc = result.best_val_acc;
    row.test_acc = result.test_acc_at_best;
    NoTape guard;
    ForwardResult ev = model->forward(g, g.features, false);
    row.final_energy = dirichlet_energy(ev.last_hidden, g);
    return row;
}

void run_parallel(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& work) {
    std::size_t workers = std::min(threads, count);
    std::atomic<std::size_t> next{0};
    std::vector<std::string> failures(count);
    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                work(i);
            } catch (const std::exception& e) {
                failures[i] = e.what();
            }
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    for (const std::string& f : failures)
        if (!f.empty()) throw ContractError("experiment cell failed: " + f);
}

}  // namespace

std::size_t resolve_threads(std::size_t requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("HYPEGT_THREADS")) {
        long n = 0;
        try {
            n = parse_long(env);
        } catch (const IoError&) {
            throw ConfigError("HYPEGT_THREADS must be an integer");
        }
        if (n < 1) throw ConfigError("HYPEGT_THREADS must be positive");
        return static_cast<std::size_t>(n);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

std::vector<OversmoothRow> run_oversmoothing(const OversmoothConfig& cfg) {
    if (cfg.depths.empty() || cfg.seeds.empty())
        throw ConfigError("oversmoothing: depths and seeds must be nonempty");
    std::vector<Cell> cells;
    for (std::size_t depth : cfg.depths) {
        std::vector<std::pair<std::string, int>> variants{{"plain", 0}};
        for (int cat : cfg.categories)
            variants.emplace_back("cat" + std::to_string(cat), cat);
        for (const auto& [name, cat] : variants)
            for (std::uint64_t seed : cfg.seeds) cells.push_back({depth, name, cat, seed});
    }

    std::vector<OversmoothRow> rows(cells.size());
    run_parallel(cells.size(), resolve_threads(cfg.threads),
                 [&](std::size_t i) { rows[i] = run_cell(cfg, cells[i]); });
    return rows;
}

std::vector<OversmoothRow> run_encoder_sweep(const EncoderSweepConfig& cfg) {
    if (cfg.encoder_layers.empty() || cfg.seeds.empty())
        throw ConfigError("encoder sweep: encoder_layers and seeds must be nonempty");
    if (cfg.category < 1) throw ConfigError("encoder sweep: category must be >= 1");

    std::vector<std::pair<OversmoothConfig, Cell>> cells;
    for (std::size_t layers : cfg.encoder_layers) {
        OversmoothConfig oc;
        oc.sbm = cfg.sbm;
        oc.kind = cfg.kind;
        oc.hidden = cfg.hidden;
        oc.epochs = cfg.epochs;
        oc.lr = cfg.lr;
        oc.weight_decay = cfg.weight_decay;
        oc.fuse = cfg.fuse;
        oc.injection = cfg.injection;
        oc.pe_init_dim = cfg.pe_init_dim;
        oc.pe_layers = layers;
        oc.pe_curvature = cfg.pe_curvature;
        std::string variant =
            "cat" + std::to_string(cfg.category) + "/enc" + std::to_string(layers);
        for (std::uint64_t seed : cfg.seeds)
            cells.emplace_back(oc, Cell{cfg.depth, variant, cfg.category, seed});
    }

    std::vector<OversmoothRow> rows(cells.size());
    run_parallel(cells.size(), resolve_threads(cfg.threads), [&](std::size_t i) {
        rows[i] = run_cell(cells[i].first, cells[i].second);
    });
    return rows;
}

std::string oversmooth_row_string(const OversmoothRow& row) {
    return "depth=" + std::to_string(row.depth) + " variant=" + row.variant +
           " seed=" + std::to_string(row.seed) + " train_acc=" + fmt_double(row.train_acc) +
           " val_acc=" + fmt_double(row.val_acc) + " test_acc=" + fmt_double(row.test_acc) +
           " energy=" + fmt_double(row.final_energy);
}

double majority_fraction(const Graph& g, const std::vector<std::uint8_t>& mask) {
    if (mask.size() != g.n) throw DimensionError("majority: mask size mismatch");
    std::map<int, std::size_t> counts;
    std::size_t total = 0;
    for (std::size_t u = 0; u < g.n; ++u) {
        if (!mask[u]) continue;
        ++counts[g.labels[u]];
        ++total;
    }
    if (total == 0) throw MetricError("majority: no rows selected by the mask");
    std::size_t best = 0;
    for (const auto& [label, count] : counts) best = std::max(best, count);
    return static_cast<double>(best) / static_cast<double>(total);
}

}  // namespace hypegt
