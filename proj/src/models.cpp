#include "hypegt/models.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "hypegt/errors.hpp"

namespace hypegt {

namespace {

constexpr double kNormEps = 1e-5;
constexpr double kNormMomentum = 0.1;

void glorot_fill(Tensor& t, const Rng& root, const std::string& name) {
    Rng stream = root.stream("init/" + name);
    double limit = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
    for (double& v : t.data) v = stream.uniform(-limit, limit);
}

void check_norm_shapes(const Tensor& x, const NormParams& np) {
    if (np.gamma.rows() != 1 || np.gamma.cols() != x.cols() || !np.gamma.same_shape(np.beta))
        throw DimensionError("norm: affine parameters must be 1 x cols(x)");
}

// (x - mu) / sqrt(var + eps) * gamma + beta with mu, var of shape 1 x d.
Tensor normalize_with(const Tensor& x, const Tensor& mu, const Tensor& var,
                      const NormParams& np) {
    std::size_t n = x.rows(), d = x.cols();
    Tensor diff = sub(x, broadcast_rows(mu, n));
    Tensor inv = recip_pos(sqrt(add(var, Tensor::full(1, d, kNormEps))));
    Tensor xhat = mul_elementwise(diff, broadcast_rows(inv, n));
    return add(mul_elementwise(xhat, broadcast_rows(np.gamma, n)),
               broadcast_rows(np.beta, n));
}

}  // namespace

NormParams NormParams::init(std::size_t dim) {
    NormParams np;
    np.gamma = Tensor::ones(1, dim);
    np.beta = Tensor::zeros(1, dim);
    np.running_mean = Tensor::zeros(1, dim);
    np.running_var = Tensor::ones(1, dim);
    return np;
}

Tensor batch_norm(const Tensor& x, NormParams& np, bool training) {
    check_norm_shapes(x, np);
    if (x.rows() == 0) throw DimensionError("batch_norm: empty batch");
    std::size_t n = x.rows();
    if (!training) return normalize_with(x, np.running_mean, np.running_var, np);

    double inv_n = 1.0 / static_cast<double>(n);
    Tensor ones_row = Tensor::ones(1, n);
    Tensor mu = scalar_mul(matmul(ones_row, x), inv_n);
    Tensor diff = sub(x, broadcast_rows(mu, n));
    Tensor var = scalar_mul(matmul(ones_row, mul_elementwise(diff, diff)), inv_n);
    Tensor out = normalize_with(x, mu, var, np);
    for (std::size_t j = 0; j < x.cols(); ++j) {
        np.running_mean.data[j] =
            (1.0 - kNormMomentum) * np.running_mean.data[j] + kNormMomentum * mu.data[j];
        np.running_var.data[j] =
            (1.0 - kNormMomentum) * np.running_var.data[j] + kNormMomentum * var.data[j];
    }
    return out;
}

Tensor layer_norm(const Tensor& x, const NormParams& np) {
    check_norm_shapes(x, np);
    if (x.cols() == 0) throw DimensionError("layer_norm: empty rows");
    std::size_t n = x.rows(), d = x.cols();
    double inv_d = 1.0 / static_cast<double>(d);
    Tensor ones_col = Tensor::ones(d, 1);
    Tensor mu = scalar_mul(matmul(x, ones_col), inv_d);
    Tensor diff = sub(x, broadcast_cols(mu, d));
    Tensor var = scalar_mul(matmul(mul_elementwise(diff, diff), ones_col), inv_d);
    Tensor inv = recip_pos(sqrt(add(var, Tensor::full(n, 1, kNormEps))));
    Tensor xhat = mul_elementwise(diff, broadcast_cols(inv, d));
    return add(mul_elementwise(xhat, broadcast_rows(np.gamma, n)),
               broadcast_rows(np.beta, n));
}

Tensor norm_forward(const Tensor& x, NormParams& np, NormKind kind, bool training) {
    if (kind == NormKind::BatchNorm) return batch_norm(x, np, training);
    return layer_norm(x, np);
}

Tensor self_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                      const Tensor* score_mask) {
    if (q.cols() != k.cols())
        throw DimensionError("self_attention: query/key width mismatch");
    if (k.rows() != v.rows())
        throw DimensionError("self_attention: key/value row mismatch");
    if (q.cols() == 0) throw DimensionError("self_attention: empty heads");
    Tensor scores =
        scalar_mul(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(q.cols())));
    if (score_mask != nullptr) {
        if (score_mask->rows() != q.rows() || score_mask->cols() != k.rows())
            throw DimensionError("self_attention: mask shape mismatch");
        scores = add(scores, *score_mask);
    }
    return matmul(softmax_rows(scores), v);
}

MHAParams MHAParams::init(std::size_t hidden, std::size_t heads, const Rng& root,
                          const std::string& prefix) {
    if (heads == 0 || hidden % heads != 0)
        throw ConfigError("mha: heads must divide the hidden width");
    std::size_t d_head = hidden / heads;
    MHAParams p;
    for (std::size_t h = 0; h < heads; ++h) {
        std::string hs = std::to_string(h + 1);
        Tensor wq(hidden, d_head), wk(hidden, d_head), wv(hidden, d_head);
        glorot_fill(wq, root, prefix + "wq" + hs);
        glorot_fill(wk, root, prefix + "wk" + hs);
        glorot_fill(wv, root, prefix + "wv" + hs);
        p.wq.push_back(std::move(wq));
        p.wk.push_back(std::move(wk));
        p.wv.push_back(std::move(wv));
    }
    p.wo = Tensor(hidden, hidden);
    glorot_fill(p.wo, root, prefix + "wo");
    return p;
}

Tensor mha(const Tensor& x, const MHAParams& p, const Tensor* score_mask) {
    if (p.wq.empty() || p.wq.size() != p.wk.size() || p.wq.size() != p.wv.size())
        throw DimensionError("mha: inconsistent head parameters");
    if (x.cols() != p.wq[0].rows()) throw DimensionError("mha: input width mismatch");
    Tensor cat;
    for (std::size_t h = 0; h < p.wq.size(); ++h) {
        Tensor head = self_attention(matmul(x, p.wq[h]), matmul(x, p.wk[h]),
                                     matmul(x, p.wv[h]), score_mask);
        cat = (h == 0) ? head : concat_cols(cat, head);
    }
    if (cat.cols() != p.wo.rows()) throw DimensionError("mha: output projection mismatch");
    return matmul(cat, p.wo);
}

GTLayerParams GTLayerParams::init(std::size_t hidden, std::size_t heads, const Rng& root,
                                  const std::string& prefix) {
    GTLayerParams p;
    p.attn = MHAParams::init(hidden, heads, root, prefix + "attn/");
    p.ffn_w1 = Tensor(hidden, 2 * hidden);
    p.ffn_w2 = Tensor(2 * hidden, hidden);
    glorot_fill(p.ffn_w1, root, prefix + "ffn/w1");
    glorot_fill(p.ffn_w2, root, prefix + "ffn/w2");
    p.norm1 = NormParams::init(hidden);
    p.norm2 = NormParams::init(hidden);
    return p;
}

Tensor gt_layer(const Tensor& x, GTLayerParams& p, NormKind norm, bool training,
                const Tensor* score_mask) {
    Tensor x1 = norm_forward(add(x, mha(x, p.attn, score_mask)), p.norm1, norm, training);
    Tensor x2 = matmul(relu(matmul(x1, p.ffn_w1)), p.ffn_w2);
    return norm_forward(add(x1, x2), p.norm2, norm, training);
}

Tensor gcn_layer(const Tensor& h, const std::shared_ptr<const SparseMatrix>& ghat,
                 const Tensor& w) {
    if (!ghat) throw ContractError("gcn_layer: null propagation matrix");
    if (h.cols() != w.rows()) throw DimensionError("gcn_layer: weight shape mismatch");
    return relu(spmm(ghat, matmul(h, w)));
}

Tensor gcnii_layer(const Tensor& h, const Tensor& h0,
                   const std::shared_ptr<const SparseMatrix>& ghat, const Tensor& w,
                   double alpha, double beta) {
    if (!ghat) throw ContractError("gcnii_layer: null propagation matrix");
    if (!h.same_shape(h0)) throw DimensionError("gcnii_layer: h and h0 shapes differ");
    if (w.rows() != h.cols() || w.cols() != h.cols())
        throw DimensionError("gcnii_layer: weight must be square of the hidden width");
    Tensor prop = add(scalar_mul(spmm(ghat, h), 1.0 - alpha), scalar_mul(h0, alpha));
    Tensor mixed = add(scalar_mul(prop, 1.0 - beta), scalar_mul(matmul(prop, w), beta));
    return relu(mixed);
}

double gcnii_beta(double lambda, std::size_t l) {
    if (l == 0) throw ContractError("gcnii_beta: layers are 1-based");
    if (lambda < 0.0) throw DomainError("gcnii_beta: lambda must be nonnegative");
    return std::log(lambda / static_cast<double>(l) + 1.0);
}

std::string model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::GT: return "gt";
        case ModelKind::GCN: return "gcn";
        case ModelKind::JKNet: return "jknet";
        case ModelKind::GCNII: return "gcnii";
    }
    throw ContractError("model_kind_name: unknown kind");
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "gt") return ModelKind::GT;
    if (name == "gcn") return ModelKind::GCN;
    if (name == "jknet") return ModelKind::JKNet;
    if (name == "gcnii") return ModelKind::GCNII;
    throw ConfigError("unknown model kind: " + name);
}

void validate_model_config(const ModelConfig& cfg) {
    if (cfg.in_dim == 0) throw ConfigError("model: in_dim must be positive");
    if (cfg.hidden == 0) throw ConfigError("model: hidden must be positive");
    if (cfg.num_layers == 0) throw ConfigError("model: num_layers must be positive");
    if (cfg.num_classes == 0) throw ConfigError("model: num_classes must be positive");
    if (cfg.kind == ModelKind::GT) {
        if (cfg.heads == 0 || cfg.hidden % cfg.heads != 0)
            throw ConfigError("model: heads must divide the hidden width");
    }
    if (cfg.kind == ModelKind::GCNII) {
        if (cfg.gcnii_alpha < 0.0 || cfg.gcnii_alpha > 1.0)
            throw ConfigError("model: gcnii_alpha must lie in [0, 1]");
        if (cfg.gcnii_lambda < 0.0)
            throw ConfigError("model: gcnii_lambda must be nonnegative");
    }
    if (cfg.use_pe) validate_pe_config(cfg.pe);
}

Model::Model(const ModelConfig& cfg) : cfg_(cfg) { validate_model_config(cfg_); }

std::vector<Tensor*> Model::parameters() {
    std::vector<Tensor*> out;
    for (auto& [name, t] : named_parameters()) out.push_back(t);
    return out;
}

void Model::init_pe(const Rng& root) {
    if (!cfg_.use_pe) return;
    pe_ = std::make_unique<PEPipeline>(cfg_.pe, root);
    if (cfg_.pe.k != cfg_.hidden) {
        pe_adapter_ = Tensor(cfg_.pe.k, cfg_.hidden);
        glorot_fill(pe_adapter_, root, "pe/adapter");
        has_adapter_ = true;
    }
}

HBatch Model::encodings_for(const Graph& g) {
    if (!pe_) throw ContractError("model: positional encodings not configured");
    HBatch p = pe_->generate(g);
    if (has_adapter_) p = adapt_pe(p, pe_adapter_);
    return p;
}

const std::shared_ptr<const SparseMatrix>& Model::ghat_for(const Graph& g) {
    std::uint64_t fp = graph_fingerprint(g);
    if (!ghat_ || ghat_fp_ != fp) {
        ghat_ = gcn_norm(g);
        ghat_fp_ = fp;
    }
    return ghat_;
}

void Model::collect_pe(std::vector<std::pair<std::string, Tensor*>>& out) {
    if (!cfg_.use_pe) return;
    for (auto& nv : pe_->params().named("pe/")) out.push_back(nv);
    if (has_adapter_) out.emplace_back("pe/adapter", &pe_adapter_);
}

namespace {

void check_input(const Graph& g, const Tensor& x, const ModelConfig& cfg) {
    if (x.rows() != g.n) throw DimensionError("model: one feature row per node required");
    if (x.cols() != cfg.in_dim) throw DimensionError("model: feature width mismatch");
}

class GTModel final : public Model {
public:
    GTModel(const ModelConfig& cfg, const Rng& root) : Model(cfg) {
        w_in_ = Tensor(cfg_.in_dim, cfg_.hidden);
        glorot_fill(w_in_, root, "in/w");
        b_in_ = Tensor::zeros(1, cfg_.hidden);
        for (std::size_t i = 0; i < cfg_.num_layers; ++i)
            layers_.push_back(GTLayerParams::init(
                cfg_.hidden, cfg_.heads, root, "layer" + std::to_string(i + 1) + "/"));
        w_cls_ = Tensor(cfg_.hidden, cfg_.num_classes);
        glorot_fill(w_cls_, root, "cls/w");
        b_cls_ = Tensor::zeros(1, cfg_.num_classes);
        init_pe(root);
    }

    ForwardResult forward(const Graph& g, const Tensor& x, bool training) override {
        check_input(g, x, cfg_);
        Tensor h = add(matmul(x, w_in_), broadcast_rows(b_in_, x.rows()));
        if (cfg_.use_pe) h = fuse(h, encodings_for(g), cfg_.fuse);
        for (GTLayerParams& lp : layers_) h = gt_layer(h, lp, cfg_.norm, training);
        Tensor logits = add(matmul(h, w_cls_), broadcast_rows(b_cls_, x.rows()));
        return {std::move(logits), std::move(h)};
    }

    std::vector<std::pair<std::string, Tensor*>> named_parameters() override {
        std::vector<std::pair<std::string, Tensor*>> out;
        out.emplace_back("in/w", &w_in_);
        out.emplace_back("in/b", &b_in_);
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            std::string p = "layer" + std::to_string(i + 1) + "/";
            GTLayerParams& lp = layers_[i];
            for (std::size_t h = 0; h < lp.attn.wq.size(); ++h) {
                std::string hs = std::to_string(h + 1);
                out.emplace_back(p + "attn/wq" + hs, &lp.attn.wq[h]);
                out.emplace_back(p + "attn/wk" + hs, &lp.attn.wk[h]);
                out.emplace_back(p + "attn/wv" + hs, &lp.attn.wv[h]);
            }
            out.emplace_back(p + "attn/wo", &lp.attn.wo);
            out.emplace_back(p + "ffn/w1", &lp.ffn_w1);
            out.emplace_back(p + "ffn/w2", &lp.ffn_w2);
            out.emplace_back(p + "norm1/gamma", &lp.norm1.gamma);
            out.emplace_back(p + "norm1/beta", &lp.norm1.beta);
            out.emplace_back(p + "norm2/gamma", &lp.norm2.gamma);
            out.emplace_back(p + "norm2/beta", &lp.norm2.beta);
        }
        out.emplace_back("cls/w", &w_cls_);
        out.emplace_back("cls/b", &b_cls_);
        collect_pe(out);
        return out;
    }

    std::vector<std::pair<std::string, Tensor*>> named_buffers() override {
        std::vector<std::pair<std::string, Tensor*>> out;
        if (cfg_.norm != NormKind::BatchNorm) return out;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            std::string p = "layer" + std::to_string(i + 1) + "/";
            GTLayerParams& lp = layers_[i];
            out.emplace_back(p + "norm1/running_mean", &lp.norm1.running_mean);
            out.emplace_back(p + "norm1/running_var", &lp.norm1.running_var);
            out.emplace_back(p + "norm2/running_mean", &lp.norm2.running_mean);
            out.emplace_back(p + "norm2/running_var", &lp.norm2.running_var);
        }
        return out;
    }

private:
    Tensor w_in_, b_in_;
    std::vector<GTLayerParams> layers_;
    Tensor w_cls_, b_cls_;
};

// Stacked first-order convolutions; JKNet variant classifies from the
// concatenation of every layer's output.
class GCNModel final : public Model {
public:
    GCNModel(const ModelConfig& cfg, const Rng& root) : Model(cfg) {
        for (std::size_t i = 0; i < cfg_.num_layers; ++i) {
            Tensor w(i == 0 ? cfg_.in_dim : cfg_.hidden, cfg_.hidden);
            glorot_fill(w, root, "layer" + std::to_string(i + 1) + "/w");
            weights_.push_back(std::move(w));
        }
        std::size_t cls_in =
            cfg_.kind == ModelKind::JKNet ? cfg_.num_layers * cfg_.hidden : cfg_.hidden;
        w_cls_ = Tensor(cls_in, cfg_.num_classes);
        glorot_fill(w_cls_, root, "cls/w");
        b_cls_ = Tensor::zeros(1, cfg_.num_classes);
        init_pe(root);
    }

    ForwardResult forward(const Graph& g, const Tensor& x, bool training) override {
        (void)training;
        check_input(g, x, cfg_);
        const auto& ghat = ghat_for(g);
        HBatch pe;
        if (cfg_.use_pe) pe = encodings_for(g);
        Tensor h = x;
        Tensor cat;
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            h = gcn_layer(h, ghat, weights_[i]);
            bool last = i + 1 == weights_.size();
            if (cfg_.use_pe &&
                (cfg_.injection == InjectionPoint::EveryLayer || last))
                h = inject_deep(h, pe, cfg_.fuse);
            if (cfg_.kind == ModelKind::JKNet) cat = (i == 0) ? h : concat_cols(cat, h);
        }
        const Tensor& cls_in = cfg_.kind == ModelKind::JKNet ? cat : h;
        Tensor logits = add(matmul(cls_in, w_cls_), broadcast_rows(b_cls_, x.rows()));
        return {std::move(logits), std::move(h)};
    }

    std::vector<std::pair<std::string, Tensor*>> named_parameters() override {
        std::vector<std::pair<std::string, Tensor*>> out;
        for (std::size_t i = 0; i < weights_.size(); ++i)
            out.emplace_back("layer" + std::to_string(i + 1) + "/w", &weights_[i]);
        out.emplace_back("cls/w", &w_cls_);
        out.emplace_back("cls/b", &b_cls_);
        collect_pe(out);
        return out;
    }

    std::vector<std::pair<std::string, Tensor*>> named_buffers() override { return {}; }

private:
    std::vector<Tensor> weights_;
    Tensor w_cls_, b_cls_;
};

class GCNIIModel final : public Model {
public:
    GCNIIModel(const ModelConfig& cfg, const Rng& root) : Model(cfg) {
        w_in_ = Tensor(cfg_.in_dim, cfg_.hidden);
        glorot_fill(w_in_, root, "in/w");
        for (std::size_t i = 0; i < cfg_.num_layers; ++i) {
            Tensor w(cfg_.hidden, cfg_.hidden);
            glorot_fill(w, root, "layer" + std::to_string(i + 1) + "/w");
            weights_.push_back(std::move(w));
        }
        w_cls_ = Tensor(cfg_.hidden, cfg_.num_classes);
        glorot_fill(w_cls_, root, "cls/w");
        b_cls_ = Tensor::zeros(1, cfg_.num_classes);
        init_pe(root);
    }

    ForwardResult forward(const Graph& g, const Tensor& x, bool training) override {
        (void)training;
        check_input(g, x, cfg_);
        const auto& ghat = ghat_for(g);
        HBatch pe;
        if (cfg_.use_pe) pe = encodings_for(g);
        Tensor h0 = relu(matmul(x, w_in_));
        Tensor h = h0;
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            h = gcnii_layer(h, h0, ghat, weights_[i], cfg_.gcnii_alpha,
                            gcnii_beta(cfg_.gcnii_lambda, i + 1));
            bool last = i + 1 == weights_.size();
            if (cfg_.use_pe &&
                (cfg_.injection == InjectionPoint::EveryLayer || last))
                h = inject_deep(h, pe, cfg_.fuse);
        }
        Tensor logits = add(matmul(h, w_cls_), broadcast_rows(b_cls_, x.rows()));
        return {std::move(logits), std::move(h)};
    }

    std::vector<std::pair<std::string, Tensor*>> named_parameters() override {
        std::vector<std::pair<std::string, Tensor*>> out;
        out.emplace_back("in/w", &w_in_);
        for (std::size_t i = 0; i < weights_.size(); ++i)
            out.emplace_back("layer" + std::to_string(i + 1) + "/w", &weights_[i]);
        out.emplace_back("cls/w", &w_cls_);
        out.emplace_back("cls/b", &b_cls_);
        collect_pe(out);
        return out;
    }

    std::vector<std::pair<std::string, Tensor*>> named_buffers() override { return {}; }

private:
    Tensor w_in_;
    std::vector<Tensor> weights_;
    Tensor w_cls_, b_cls_;
};

}  // namespace

std::unique_ptr<Model> make_model(const ModelConfig& cfg, std::uint64_t seed) {
    Rng root(seed);
    switch (cfg.kind) {
        case ModelKind::GT: return std::make_unique<GTModel>(cfg, root);
        case ModelKind::GCN:
        case ModelKind::JKNet: return std::make_unique<GCNModel>(cfg, root);
        case ModelKind::GCNII: return std::make_unique<GCNIIModel>(cfg, root);
    }
    throw ContractError("make_model: unknown kind");
}

}  // namespace hypegt
