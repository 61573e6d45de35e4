#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "hypegt/graph.hpp"
#include "hypegt/models.hpp"
#include "hypegt/tensor.hpp"

namespace hypegt {

struct AdamParams {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;  // applied as an L2 term on the gradient
};

struct AdamState {
    std::vector<std::vector<double>> m, v;
    std::size_t t = 0;

    static AdamState init(const std::vector<Tensor*>& params);
};

// One bias-corrected moment update; lr overrides hp.lr so a schedule can
// drive it.
void adam_step(const std::vector<Tensor*>& params,
               const std::vector<const std::vector<double>*>& grads, AdamState& state,
               const AdamParams& hp, double lr);

// Halves the rate after `patience` observations without strict improvement;
// refuses to drop below the floor and reports that as a stop signal.
struct LrSchedule {
    double lr = 0.01;
    double factor = 0.5;
    std::size_t patience = 10;
    double floor = 1e-6;

    bool observe(double metric);
    bool stopped() const { return stopped_; }

private:
    double best_ = -1e300;
    std::size_t bad_ = 0;
    bool stopped_ = false;
};

// Fraction of masked rows whose argmax (lowest index on ties) matches the
// label.
double accuracy(const Tensor& logits, const std::vector<int>& labels,
                const std::vector<std::uint8_t>& mask);

// Area under the ROC curve for two-class logits over the masked rows,
// computed with midranks; requires both classes present.
double auroc(const Tensor& logits, const std::vector<int>& labels,
             const std::vector<std::uint8_t>& mask);

// Sum over undirected edges of |h_u / sqrt(1 + d_u) - h_v / sqrt(1 + d_v)|^2.
double dirichlet_energy(const Tensor& h, const Graph& g);

struct TrainConfig {
    std::size_t epochs = 200;
    AdamParams adam;
    double lr_factor = 0.5;
    std::size_t lr_patience = 10;
    double lr_floor = 1e-6;
    double target_train_acc = 0.0;  // > 0 enables early exit
    bool record_energy = false;
    std::size_t run_id = 0;
};

struct EpochRecord {
    std::size_t run = 0;
    std::size_t epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    double test_acc = 0.0;
    bool has_energy = false;
    double energy = 0.0;
};

std::string epoch_record_json(const EpochRecord& r);

struct TrainResult {
    std::vector<EpochRecord> records;  // entry 0 is the pre-training state
    double best_val_acc = 0.0;
    double test_acc_at_best = 0.0;
    double final_train_acc = 0.0;
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
    bool reached_target = false;
};

// Full-batch training on the graph's split. Each epoch takes one optimizer
// step on the train mask, then evaluates all three splits; the model is left
// holding the parameters (and norm buffers) of the best validation epoch.
TrainResult train_loop(Model& model, const Graph& g, const TrainConfig& cfg,
                       std::ostream* metrics = nullptr);

std::string checkpoint_to_string(Model& model);
void save_checkpoint(Model& model, const std::string& path);
void checkpoint_from_lines(Model& model, const std::vector<std::string>& lines);
void load_checkpoint(Model& model, const std::string& path);

}  // namespace hypegt
