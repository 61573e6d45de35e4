#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hypegt/fusion.hpp"
#include "hypegt/graph.hpp"
#include "hypegt/pe.hpp"
#include "hypegt/rng.hpp"
#include "hypegt/tensor.hpp"

namespace hypegt {

enum class NormKind { BatchNorm, LayerNorm };

// Affine normalization parameters plus running statistics (the running
// tensors are buffers: tracked by checkpoints, never by the tape).
struct NormParams {
    Tensor gamma;
    Tensor beta;
    Tensor running_mean;
    Tensor running_var;

    static NormParams init(std::size_t dim);
};

// Normalizes columns over the batch. Training mode uses biased batch
// statistics and folds them into the running buffers with momentum 0.1;
// eval mode normalizes with the running buffers as constants.
Tensor batch_norm(const Tensor& x, NormParams& np, bool training);

// Normalizes each row over its features; no running statistics.
Tensor layer_norm(const Tensor& x, const NormParams& np);

Tensor norm_forward(const Tensor& x, NormParams& np, NormKind kind, bool training);

// softmax(q k^T / sqrt(d)) v with an optional additive score mask
// (0 = keep, large negative = block).
Tensor self_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                      const Tensor* score_mask = nullptr);

struct MHAParams {
    std::vector<Tensor> wq, wk, wv;  // one hidden x d_head matrix per head
    Tensor wo;                       // heads*d_head x hidden

    static MHAParams init(std::size_t hidden, std::size_t heads, const Rng& root,
                          const std::string& prefix);
};

Tensor mha(const Tensor& x, const MHAParams& p, const Tensor* score_mask = nullptr);

// Transformer block: attention and feed-forward sublayers, each wrapped in
// a residual connection and a normalization. The feed-forward expansion is
// hidden -> 2*hidden -> hidden without biases.
struct GTLayerParams {
    MHAParams attn;
    Tensor ffn_w1, ffn_w2;
    NormParams norm1, norm2;

    static GTLayerParams init(std::size_t hidden, std::size_t heads, const Rng& root,
                              const std::string& prefix);
};

Tensor gt_layer(const Tensor& x, GTLayerParams& p, NormKind norm, bool training,
                const Tensor* score_mask = nullptr);

// relu(Ghat h w); no bias.
Tensor gcn_layer(const Tensor& h, const std::shared_ptr<const SparseMatrix>& ghat,
                 const Tensor& w);

// relu(((1-alpha) Ghat h + alpha h0) ((1-beta) I + beta w)).
Tensor gcnii_layer(const Tensor& h, const Tensor& h0,
                   const std::shared_ptr<const SparseMatrix>& ghat, const Tensor& w,
                   double alpha, double beta);

// Identity-mixing weight for layer l (1-based): log(lambda / l + 1).
double gcnii_beta(double lambda, std::size_t l);

enum class ModelKind { GT, GCN, JKNet, GCNII };

std::string model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

struct ModelConfig {
    ModelKind kind = ModelKind::GT;
    std::size_t in_dim = 1;
    std::size_t hidden = 16;
    std::size_t num_layers = 2;
    std::size_t num_classes = 2;
    std::size_t heads = 4;                // GT
    NormKind norm = NormKind::BatchNorm;  // GT
    double gcnii_alpha = 0.1;
    double gcnii_lambda = 0.5;
    bool use_pe = false;
    PEConfig pe;
    FuseStrategy fuse = FuseStrategy::V1;
    InjectionPoint injection = InjectionPoint::EveryLayer;
};

void validate_model_config(const ModelConfig& cfg);

struct ForwardResult {
    Tensor logits;       // n x num_classes
    Tensor last_hidden;  // final hidden representation, n x hidden
};

class Model {
public:
    explicit Model(const ModelConfig& cfg);
    virtual ~Model() = default;

    const ModelConfig& config() const { return cfg_; }
    virtual ForwardResult forward(const Graph& g, const Tensor& x, bool training) = 0;
    virtual std::vector<std::pair<std::string, Tensor*>> named_parameters() = 0;
    virtual std::vector<std::pair<std::string, Tensor*>> named_buffers() = 0;
    std::vector<Tensor*> parameters();

protected:
    // Positional encodings for g, adapted to the model width, or the cached
    // propagation matrix; both keyed on the graph fingerprint.
    HBatch encodings_for(const Graph& g);
    const std::shared_ptr<const SparseMatrix>& ghat_for(const Graph& g);
    void init_pe(const Rng& root);
    void collect_pe(std::vector<std::pair<std::string, Tensor*>>& out);

    ModelConfig cfg_;
    std::unique_ptr<PEPipeline> pe_;
    Tensor pe_adapter_;  // k x hidden when the widths differ, else unused
    bool has_adapter_ = false;

private:
    std::uint64_t ghat_fp_ = 0;
    std::shared_ptr<const SparseMatrix> ghat_;
};

std::unique_ptr<Model> make_model(const ModelConfig& cfg, std::uint64_t seed);

}  // namespace hypegt
