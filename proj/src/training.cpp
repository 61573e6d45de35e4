#include "hypegt/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <utility>

#include "hypegt/errors.hpp"
#include "hypegt/text.hpp"

namespace hypegt {

AdamState AdamState::init(const std::vector<Tensor*>& params) {
    AdamState s;
    for (const Tensor* p : params) {
        s.m.emplace_back(p->size(), 0.0);
        s.v.emplace_back(p->size(), 0.0);
    }
    return s;
}

void adam_step(const std::vector<Tensor*>& params,
               const std::vector<const std::vector<double>*>& grads, AdamState& state,
               const AdamParams& hp, double lr) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw ContractError("adam: parameter, gradient and state counts differ");
    state.t += 1;
    double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.t));
    double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const std::vector<double>& g = *grads[i];
        if (g.size() != p.size() || state.m[i].size() != p.size())
            throw ContractError("adam: gradient size mismatch");
        for (std::size_t j = 0; j < p.size(); ++j) {
            double grad = g[j] + hp.weight_decay * p.data[j];
            state.m[i][j] = hp.beta1 * state.m[i][j] + (1.0 - hp.beta1) * grad;
            state.v[i][j] = hp.beta2 * state.v[i][j] + (1.0 - hp.beta2) * grad * grad;
            double mhat = state.m[i][j] / bc1;
            double vhat = state.v[i][j] / bc2;
            p.data[j] -= lr * mhat / (std::sqrt(vhat) + hp.eps);
        }
    }
}

bool LrSchedule::observe(double metric) {
    if (stopped_) return true;
    if (metric > best_) {
        best_ = metric;
        bad_ = 0;
        return false;
    }
    if (++bad_ >= patience) {
        bad_ = 0;
        double next = lr * factor;
        if (next < floor)
            stopped_ = true;
        else
            lr = next;
    }
    return stopped_;
}

namespace {

void check_metric_inputs(const Tensor& logits, const std::vector<int>& labels,
                         const std::vector<std::uint8_t>& mask) {
    if (logits.rows() != labels.size() || logits.rows() != mask.size())
        throw DimensionError("metric: logits, labels and mask row counts differ");
}

}  // namespace

double accuracy(const Tensor& logits, const std::vector<int>& labels,
                const std::vector<std::uint8_t>& mask) {
    check_metric_inputs(logits, labels, mask);
    std::size_t total = 0, correct = 0;
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        if (!mask[r]) continue;
        std::size_t arg = 0;
        for (std::size_t c = 1; c < logits.cols(); ++c)
            if (logits.at(r, c) > logits.at(r, arg)) arg = c;
        if (static_cast<int>(arg) == labels[r]) ++correct;
        ++total;
    }
    if (total == 0) throw MetricError("accuracy: no rows selected by the mask");
    return static_cast<double>(correct) / static_cast<double>(total);
}

double auroc(const Tensor& logits, const std::vector<int>& labels,
             const std::vector<std::uint8_t>& mask) {
    check_metric_inputs(logits, labels, mask);
    if (logits.cols() != 2) throw MetricError("auroc: two-class logits required");
    std::vector<double> scores;
    std::vector<int> y;
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        if (!mask[r]) continue;
        if (labels[r] != 0 && labels[r] != 1)
            throw MetricError("auroc: labels must be 0 or 1");
        scores.push_back(logits.at(r, 1) - logits.at(r, 0));
        y.push_back(labels[r]);
    }
    std::size_t n_pos = 0;
    for (int v : y) n_pos += static_cast<std::size_t>(v);
    std::size_t n_neg = y.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw MetricError("auroc: both classes must appear under the mask");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) {
        return scores[a] < scores[b];
    });
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k)
            if (y[order[k]] == 1) rank_sum_pos += midrank;
        i = j + 1;
    }
    double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

double dirichlet_energy(const Tensor& h, const Graph& g) {
    if (h.rows() != g.n) throw DimensionError("dirichlet_energy: one row per node required");
    std::vector<double> scale(g.n);
    for (std::size_t u = 0; u < g.n; ++u)
        scale[u] = 1.0 / std::sqrt(1.0 + static_cast<double>(g.degree(u)));
    double energy = 0.0;
    for (std::size_t u = 0; u < g.n; ++u) {
        for (std::size_t k = g.offsets[u]; k < g.offsets[u + 1]; ++k) {
            std::size_t v = g.targets[k];
            if (v <= u) continue;
            for (std::size_t c = 0; c < h.cols(); ++c) {
                double d = h.at(u, c) * scale[u] - h.at(v, c) * scale[v];
                energy += d * d;
            }
        }
    }
    return energy;
}

std::string epoch_record_json(const EpochRecord& r) {
    std::string out = "{\"run\":" + std::to_string(r.run);
    out += ",\"epoch\":" + std::to_string(r.epoch);
    out += ",\"lr\":" + fmt_double(r.lr);
    out += ",\"train_loss\":" + fmt_double(r.train_loss);
    out += ",\"train_acc\":" + fmt_double(r.train_acc);
    out += ",\"val_acc\":" + fmt_double(r.val_acc);
    out += ",\"test_acc\":" + fmt_double(r.test_acc);
    if (r.has_energy) out += ",\"dirichlet_energy\":" + fmt_double(r.energy);
    out += "}";
    return out;
}

TrainResult train_loop(Model& model, const Graph& g, const TrainConfig& cfg,
                       std::ostream* metrics) {
    auto params = model.parameters();
    AdamState state = AdamState::init(params);
    LrSchedule sched;
    sched.lr = cfg.adam.lr;
    sched.factor = cfg.lr_factor;
    sched.patience = cfg.lr_patience;
    sched.floor = cfg.lr_floor;

    TrainResult result;
    double best_val = -1.0;
    std::vector<std::vector<double>> best_params, best_buffers;
    auto snapshot = [&]() {
        best_params.clear();
        for (const Tensor* p : params) best_params.push_back(p->data);
        best_buffers.clear();
        for (auto& [name, b] : model.named_buffers()) best_buffers.push_back(b->data);
    };

    double last_train_loss = 0.0;
    for (std::size_t epoch = 0; epoch <= cfg.epochs; ++epoch) {
        if (epoch > 0) {
            Tape tape;
            for (Tensor* p : params) tape.watch(*p);
            ForwardResult out = model.forward(g, g.features, true);
            Tensor loss = cross_entropy(out.logits, g.labels, g.train_mask);
            last_train_loss = loss.value();
            tape.backward(loss);
            std::vector<const std::vector<double>*> grads;
            grads.reserve(params.size());
            for (Tensor* p : params) grads.push_back(&tape.grad(*p));
            adam_step(params, grads, state, cfg.adam, sched.lr);
        }

        NoTape guard;
        ForwardResult ev = model.forward(g, g.features, false);
        EpochRecord rec;
        rec.run = cfg.run_id;
        rec.epoch = epoch;
        rec.lr = sched.lr;
        rec.train_loss = epoch == 0
                             ? cross_entropy(ev.logits, g.labels, g.train_mask).value()
                             : last_train_loss;
        rec.train_acc = accuracy(ev.logits, g.labels, g.train_mask);
        rec.val_acc = accuracy(ev.logits, g.labels, g.val_mask);
        rec.test_acc = accuracy(ev.logits, g.labels, g.test_mask);
        if (cfg.record_energy) {
            rec.has_energy = true;
            rec.energy = dirichlet_energy(ev.last_hidden, g);
        }
        result.records.push_back(rec);
        if (metrics) *metrics << epoch_record_json(rec) << "\n";

        if (rec.val_acc > best_val) {
            best_val = rec.val_acc;
            result.best_val_acc = rec.val_acc;
            result.test_acc_at_best = rec.test_acc;
            result.best_epoch = epoch;
            snapshot();
        }
        result.epochs_run = epoch;
        result.final_train_acc = rec.train_acc;
        if (cfg.target_train_acc > 0.0 && rec.train_acc >= cfg.target_train_acc) {
            result.reached_target = true;
            break;
        }
        if (epoch > 0 && sched.observe(rec.val_acc)) break;
    }

    std::size_t i = 0;
    for (Tensor* p : params) p->data = best_params[i++];
    auto bufs = model.named_buffers();
    for (std::size_t b = 0; b < bufs.size(); ++b) bufs[b].second->data = best_buffers[b];
    return result;
}

namespace {

std::string tensor_block(const std::string& name, const Tensor& t) {
    std::string out =
        name + " " + std::to_string(t.rows()) + " " + std::to_string(t.cols()) + "\n";
    for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t c = 0; c < t.cols(); ++c) {
            if (c > 0) out += " ";
            out += fmt_double(t.at(r, c));
        }
        out += "\n";
    }
    return out;
}

class LineReader {
public:
    explicit LineReader(const std::vector<std::string>& lines) : lines_(lines) {}

    const std::string& next() {
        if (pos_ >= lines_.size()) throw IoError("checkpoint: truncated file");
        return lines_[pos_++];
    }

    bool done() const { return pos_ >= lines_.size(); }

private:
    const std::vector<std::string>& lines_;
    std::size_t pos_ = 0;
};

void read_section(LineReader& reader, const std::string& tag,
                  std::vector<std::pair<std::string, Tensor*>> items) {
    std::vector<std::string> head = split_ws(reader.next());
    if (head.size() != 2 || head[0] != tag)
        throw IoError("checkpoint: expected section header '" + tag + "'");
    std::size_t count = static_cast<std::size_t>(parse_long(head[1]));
    if (count != items.size())
        throw IoError("checkpoint: " + tag + " count does not match the model");
    std::map<std::string, Tensor*> by_name(items.begin(), items.end());
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<std::string> fields = split_ws(reader.next());
        if (fields.size() != 3) throw IoError("checkpoint: malformed tensor header");
        auto it = by_name.find(fields[0]);
        if (it == by_name.end())
            throw IoError("checkpoint: unknown tensor name " + fields[0]);
        Tensor& t = *it->second;
        std::size_t rows = static_cast<std::size_t>(parse_long(fields[1]));
        std::size_t cols = static_cast<std::size_t>(parse_long(fields[2]));
        if (rows != t.rows() || cols != t.cols())
            throw IoError("checkpoint: shape mismatch for " + fields[0]);
        for (std::size_t r = 0; r < rows; ++r) {
            std::vector<std::string> vals = split_ws(reader.next());
            if (vals.size() != cols)
                throw IoError("checkpoint: wrong value count for " + fields[0]);
            for (std::size_t c = 0; c < cols; ++c) t.at(r, c) = parse_double(vals[c]);
        }
        by_name.erase(it);
    }
}

}  // namespace

std::string checkpoint_to_string(Model& model) {
    std::string out = "hypegt-checkpoint 1\n";
    auto params = model.named_parameters();
    out += "params " + std::to_string(params.size()) + "\n";
    for (auto& [name, t] : params) out += tensor_block(name, *t);
    auto buffers = model.named_buffers();
    out += "buffers " + std::to_string(buffers.size()) + "\n";
    for (auto& [name, t] : buffers) out += tensor_block(name, *t);
    out += "end\n";
    return out;
}

void save_checkpoint(Model& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << checkpoint_to_string(model);
    if (!out) throw IoError("failed writing " + path);
}

void checkpoint_from_lines(Model& model, const std::vector<std::string>& lines) {
    LineReader reader(lines);
    if (reader.next() != "hypegt-checkpoint 1")
        throw IoError("checkpoint: bad header");
    read_section(reader, "params", model.named_parameters());
    read_section(reader, "buffers", model.named_buffers());
    if (reader.next() != "end") throw IoError("checkpoint: missing end marker");
    while (!reader.done())
        if (!trim(reader.next()).empty()) throw IoError("checkpoint: trailing content");
}

void load_checkpoint(Model& model, const std::string& path) {
    checkpoint_from_lines(model, read_lines(path));
}

}  // namespace hypegt
