#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hypegt/graph.hpp"
#include "hypegt/models.hpp"
#include "hypegt/training.hpp"

namespace hypegt {

struct OversmoothConfig {
    // feature_dim 1 collapses the block indicator, so the encodings carry the
    // only class signal and the no-PE baseline measures pure propagation.
    SBMParams sbm{300, 2, 0.1, 0.01, 1, 0.0, 0.1};
    std::vector<std::size_t> depths{8, 16, 32};
    std::vector<std::uint64_t> seeds{0, 1, 2, 3};
    std::vector<int> categories{3, 4};  // PE variants trained next to "plain"
    ModelKind kind = ModelKind::GCN;
    std::size_t hidden = 16;
    std::size_t epochs = 200;
    double lr = 0.01;
    double weight_decay = 5e-4;
    FuseStrategy fuse = FuseStrategy::V1;
    InjectionPoint injection = InjectionPoint::EveryLayer;
    std::size_t pe_init_dim = 8;
    std::size_t pe_layers = 2;
    double pe_curvature = 1.0;
    std::size_t threads = 0;  // 0: HYPEGT_THREADS, else hardware concurrency
};

struct OversmoothRow {
    std::size_t depth = 0;
    std::string variant;  // "plain" or "catN"
    std::size_t encoder_layers = 0;  // 0 when no encodings are used
    std::uint64_t seed = 0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    double test_acc = 0.0;
    double final_energy = 0.0;  // Dirichlet energy of the restored model
};

// Trains every (depth x variant x seed) cell independently. Row order and
// contents are deterministic regardless of the worker count.
std::vector<OversmoothRow> run_oversmoothing(const OversmoothConfig& cfg);

std::string oversmooth_row_string(const OversmoothRow& row);

// Holds the model depth fixed and sweeps the encoder layer count instead.
struct EncoderSweepConfig {
    SBMParams sbm{300, 2, 0.1, 0.01, 1, 0.0, 0.1};
    std::size_t depth = 4;
    std::vector<std::size_t> encoder_layers{1, 2, 3, 4, 5};
    std::vector<std::uint64_t> seeds{0};
    int category = 3;
    ModelKind kind = ModelKind::GCN;
    std::size_t hidden = 16;
    std::size_t epochs = 200;
    double lr = 0.01;
    double weight_decay = 5e-4;
    FuseStrategy fuse = FuseStrategy::V1;
    InjectionPoint injection = InjectionPoint::EveryLayer;
    std::size_t pe_init_dim = 8;
    double pe_curvature = 1.0;
    std::size_t threads = 0;
};

// One trained cell per (encoder layer count x seed); ordering is fixed.
std::vector<OversmoothRow> run_encoder_sweep(const EncoderSweepConfig& cfg);

// Fraction of masked nodes carrying the most common masked label.
double majority_fraction(const Graph& g, const std::vector<std::uint8_t>& mask);

// requested > 0 wins; otherwise HYPEGT_THREADS, otherwise the hardware count.
std::size_t resolve_threads(std::size_t requested);

}  // namespace hypegt
