#include "hypegt/tensor.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <utility>

namespace hypegt {

namespace {

thread_local Tape* g_active_tape = nullptr;

std::uint64_t fresh_serial() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1);
}

std::string shape_str(const Tensor& t) {
    return "(" + std::to_string(t.n_rows) + "x" + std::to_string(t.n_cols) + ")";
}

bool bound_to_active(const Tensor& t) {
    Tape* a = g_active_tape;
    return a != nullptr && t.tape == a && t.tape_serial == a->serial() && t.node >= 0;
}

// Attach the result of a recorded op to the active tape.
void attach(Tensor& out, int node_id) {
    out.tape = g_active_tape;
    out.tape_serial = g_active_tape->serial();
    out.node = node_id;
    out.requires_grad = true;
}

void record_unary(OpKind op, const Tensor& x, Tensor& out, std::vector<Tensor> saved,
                  double scalar = 0.0, std::size_t a = 0, std::size_t b = 0) {
    if (!bound_to_active(x)) return;
    Tape::Node node;
    node.op = op;
    node.in0 = x.node;
    node.out_rows = out.n_rows;
    node.out_cols = out.n_cols;
    node.saved = std::move(saved);
    node.scalar = scalar;
    node.a = a;
    node.b = b;
    attach(out, g_active_tape->record(std::move(node)));
}

void record_binary(OpKind op, const Tensor& x, const Tensor& y, Tensor& out,
                   std::vector<Tensor> saved, std::size_t a = 0) {
    bool bx = bound_to_active(x);
    bool by = bound_to_active(y);
    if (!bx && !by) return;
    Tape::Node node;
    node.op = op;
    node.in0 = bx ? x.node : -1;
    node.in1 = by ? y.node : -1;
    node.out_rows = out.n_rows;
    node.out_cols = out.n_cols;
    node.saved = std::move(saved);
    node.a = a;
    attach(out, g_active_tape->record(std::move(node)));
}

Tensor detached(const Tensor& t) {
    Tensor c(t.n_rows, t.n_cols, t.data);
    return c;
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a) +
                             " vs " + shape_str(b));
    }
}

constexpr double kArcoshClampEps = 1e-15;
constexpr double kArtanhClampEps = 1e-15;

}  // namespace

Tensor::Tensor(std::size_t rows, std::size_t cols)
    : n_rows(rows), n_cols(cols), data(rows * cols, 0.0) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : n_rows(rows), n_cols(cols), data(std::move(values)) {
    if (data.size() != rows * cols) {
        throw DimensionError("Tensor: " + std::to_string(data.size()) +
                             " values for shape (" + std::to_string(rows) + "x" +
                             std::to_string(cols) + ")");
    }
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) { return Tensor(rows, cols); }

Tensor Tensor::ones(std::size_t rows, std::size_t cols) { return full(rows, cols, 1.0); }

Tensor Tensor::full(std::size_t rows, std::size_t cols, double value) {
    Tensor t(rows, cols);
    for (double& v : t.data) v = value;
    return t;
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t(n, n);
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

Tensor Tensor::scalar(double value) { return Tensor(1, 1, {value}); }

Tensor Tensor::row(std::vector<double> values) {
    std::size_t n = values.size();
    return Tensor(1, n, std::move(values));
}

Tensor Tensor::column(std::vector<double> values) {
    std::size_t n = values.size();
    return Tensor(n, 1, std::move(values));
}

double Tensor::value() const {
    if (size() != 1) throw ContractError("Tensor::value: tensor is not scalar " + shape_str(*this));
    return data[0];
}

bool Tensor::tracked() const { return bound_to_active(*this); }

Tensor SparseMatrix::to_dense() const {
    Tensor d(n_rows, n_cols);
    for (std::size_t i = 0; i < n_rows; ++i) {
        for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
            d.at(i, cols[k]) += vals[k];
        }
    }
    return d;
}

// ---------------------------------------------------------------------------
// Tape

Tape::Tape() : serial_(fresh_serial()), previous_(g_active_tape) { g_active_tape = this; }

Tape::~Tape() { g_active_tape = previous_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::watch(Tensor& t) {
    if (t.tape == this && t.tape_serial == serial_ && t.node >= 0) return;
    Node node;
    node.op = OpKind::Leaf;
    node.out_rows = t.n_rows;
    node.out_cols = t.n_cols;
    t.tape = this;
    t.tape_serial = serial_;
    t.node = record(std::move(node));
    t.requires_grad = true;
}

int Tape::record(Node node) {
    nodes_.push_back(std::move(node));
    return static_cast<int>(nodes_.size()) - 1;
}

const std::vector<double>& Tape::grad(const Tensor& t) const {
    if (!ran_backward_) throw ContractError("Tape::grad: backward has not run");
    if (t.tape != this || t.tape_serial != serial_ || t.node < 0) {
        throw ContractError("Tape::grad: tensor is not bound to this tape");
    }
    auto& g = grads_[static_cast<std::size_t>(t.node)];
    if (g.empty()) g.assign(t.size(), 0.0);
    return g;
}

namespace {

// Gradient buffer accessor with lazy zero-fill.
std::vector<double>& grad_buf(std::vector<std::vector<double>>& grads, int id,
                              std::size_t len) {
    auto& g = grads[static_cast<std::size_t>(id)];
    if (g.empty()) g.assign(len, 0.0);
    return g;
}

}  // namespace

void Tape::backward(const Tensor& loss) {
    if (loss.size() != 1) {
        throw ContractError("Tape::backward: loss must be scalar, got " + shape_str(loss));
    }
    grads_.assign(nodes_.size(), {});
    ran_backward_ = true;
    if (loss.tape != this || loss.tape_serial != serial_ || loss.node < 0) {
        return;  // loss is constant w.r.t. everything on this tape
    }

    grads_[static_cast<std::size_t>(loss.node)] = {1.0};

    for (int i = loss.node; i >= 0; --i) {
        const Node& nd = nodes_[static_cast<std::size_t>(i)];
        const auto& g = grads_[static_cast<std::size_t>(i)];
        if (g.empty() || nd.op == OpKind::Leaf) continue;

        switch (nd.op) {
            case OpKind::MatMul: {
                const Tensor& A = nd.saved[0];
                const Tensor& B = nd.saved[1];
                std::size_t m = A.n_rows, k = A.n_cols, n = B.n_cols;
                if (nd.in0 >= 0) {
                    auto& da = grad_buf(grads_, nd.in0, A.size());
                    for (std::size_t r = 0; r < m; ++r)
                        for (std::size_t j = 0; j < n; ++j) {
                            double gv = g[r * n + j];
                            if (gv == 0.0) continue;
                            for (std::size_t c = 0; c < k; ++c)
                                da[r * k + c] += gv * B.data[c * n + j];
                        }
                }
                if (nd.in1 >= 0) {
                    auto& db = grad_buf(grads_, nd.in1, B.size());
                    for (std::size_t r = 0; r < m; ++r)
                        for (std::size_t c = 0; c < k; ++c) {
                            double av = A.data[r * k + c];
                            if (av == 0.0) continue;
                            for (std::size_t j = 0; j < n; ++j)
                                db[c * n + j] += av * g[r * n + j];
                        }
                }
                break;
            }
            case OpKind::Add: {
                if (nd.in0 >= 0) {
                    auto& da = grad_buf(grads_, nd.in0, g.size());
                    for (std::size_t t = 0; t < g.size(); ++t) da[t] += g[t];
                }
                if (nd.in1 >= 0) {
                    auto& db = grad_buf(grads_, nd.in1, g.size());
                    for (std::size_t t = 0; t < g.size(); ++t) db[t] += g[t];
                }
                break;
            }
            case OpKind::Sub: {
                if (nd.in0 >= 0) {
                    auto& da = grad_buf(grads_, nd.in0, g.size());
                    for (std::size_t t = 0; t < g.size(); ++t) da[t] += g[t];
                }
                if (nd.in1 >= 0) {
                    auto& db = grad_buf(grads_, nd.in1, g.size());
                    for (std::size_t t = 0; t < g.size(); ++t) db[t] -= g[t];
                }
                break;
            }
            case OpKind::MulElementwise: {
                const Tensor& A = nd.saved[0];
                const Tensor& B = nd.saved[1];
                if (nd.in0 >= 0) {
                    auto& da = grad_buf(grads_, nd.in0, g.size());
                    for (std::size_t t = 0; t < g.size(); ++t) da[t] += g[t] * B.data[t];
                }
                if (nd.in1 >= 0) {
                    auto& db = grad_buf(grads_, nd.in1, g.size());
                    for (std::size_t t = 0; t < g.size(); ++t) db[t] += g[t] * A.data[t];
                }
                break;
            }
            case OpKind::ScalarMul: {
                auto& da = grad_buf(grads_, nd.in0, g.size());
                for (std::size_t t = 0; t < g.size(); ++t) da[t] += nd.scalar * g[t];
                break;
            }
            case OpKind::Relu: {
                const Tensor& X = nd.saved[0];
                auto& da = grad_buf(grads_, nd.in0, g.size());
                for (std::size_t t = 0; t < g.size(); ++t)
                    da[t] += X.data[t] > 0.0 ? g[t] : 0.0;
                break;
            }
            case OpKind::Tanh: {
                const Tensor& Y = nd.saved[0];
                auto& da = grad_buf(grads_, nd.in0, g.size());
                for (std::size_t t = 0; t < g.size(); ++t)
                    da[t] += g[t] * (1.0 - Y.data[t] * Y.data[t]);
                break;
            }
            case OpKind::Sinh: {
                const Tensor& X = nd.saved[0];
                auto& da = grad_buf(grads_, nd.in0, g.size());
                for (std::size_t t = 0; t < g.size(); ++t)
                    da[t] += g[t] * std::cosh(X.data[t]);
                break;
            }
            case OpKind::Cosh: {
                const Tensor& X = nd.saved[0];
                auto& da = grad_buf(grads_, nd.in0, g.size());
                for (std::size_t t = 0; t < g.size(); ++t)
                    da[t] += g[t] * std::sinh(X.data[t]);
                break;
            }
            case OpKind::Arcosh: {
                const Tensor& X = nd.saved[0];  // post-clamp input
                auto& da = grad_buf(grads_, nd.in0, g.size());
                for (std::size_t t = 0; t < g.size(); ++t) {
                    double x = X.data[t];
                    double denom = std::sqrt(std::max(x * x - 1.0, 1e-24));
                    da[t] += g[t] / denom;
                }
                break;
            }
            case OpKind::Artanh: {
                const Tensor& X = nd.saved[0];  // post-clamp input
                auto& da = grad_buf(grads_, nd.in0, g.size());
                for (std::size_t t = 0; t < g.size(); ++t) {
                    double x = X.data[t];
                    double denom = std::max(1.0 - x * x, 1e-24);
                    da[t] += g[t] / denom;
                }
                break;
            }
            case OpKind::Exp: {
                const Tensor& Y = nd.saved[0];
                auto& da = grad_buf(grads_, nd.in0, g.size());
                for (std::size_t t = 0; t < g.size(); ++t) da[t] += g[t] * Y.data[t];
                break;
            }
            case OpKind::Log: {
                const Tensor& X = nd.saved[0];
                auto& da = grad_buf(grads_, nd.in0, g.size());
                for (std::size_t t = 0; t < g.size(); ++t) da[t] += g[t] / X.data[t];
                break;
            }
            case OpKind::Sqrt: {
                const Tensor& Y = nd.saved[0];
                auto& da = grad_buf(grads_, nd.in0, g.size());
                for (std::size_t t = 0; t < g.size(); ++t)
                    da[t] += g[t] / (2.0 * std::max(Y.data[t], 1e-150));
                break;
            }
            case OpKind::RowL2Norm: {
                const Tensor& X = nd.saved[0];
                const Tensor& Y = nd.saved[1];  // n x 1 norms
                auto& da = grad_buf(grads_, nd.in0, X.size());
                for (std::size_t r = 0; r < X.n_rows; ++r) {
                    double denom = std::max(Y.data[r], 1e-150);
                    double gr = g[r];
                    for (std::size_t c = 0; c < X.n_cols; ++c)
                        da[r * X.n_cols + c] += gr * X.data[r * X.n_cols + c] / denom;
                }
                break;
            }
            case OpKind::SoftmaxRows: {
                const Tensor& Y = nd.saved[0];
                auto& da = grad_buf(grads_, nd.in0, g.size());
                std::size_t n = Y.n_cols;
                for (std::size_t r = 0; r < Y.n_rows; ++r) {
                    double dot = 0.0;
                    for (std::size_t c = 0; c < n; ++c)
                        dot += g[r * n + c] * Y.data[r * n + c];
                    for (std::size_t c = 0; c < n; ++c)
                        da[r * n + c] += Y.data[r * n + c] * (g[r * n + c] - dot);
                }
                break;
            }
            case OpKind::Sum: {
                auto& da = grad_buf(grads_, nd.in0, nd.a);
                for (std::size_t t = 0; t < da.size(); ++t) da[t] += g[0];
                break;
            }
            case OpKind::Mean: {
                auto& da = grad_buf(grads_, nd.in0, nd.a);
                double gv = g[0] / static_cast<double>(nd.a);
                for (std::size_t t = 0; t < da.size(); ++t) da[t] += gv;
                break;
            }
            case OpKind::ConcatCols: {
                std::size_t w0 = nd.a;
                std::size_t w1 = nd.out_cols - w0;
                if (nd.in0 >= 0) {
                    auto& da = grad_buf(grads_, nd.in0, nd.out_rows * w0);
                    for (std::size_t r = 0; r < nd.out_rows; ++r)
                        for (std::size_t c = 0; c < w0; ++c)
                            da[r * w0 + c] += g[r * nd.out_cols + c];
                }
                if (nd.in1 >= 0) {
                    auto& db = grad_buf(grads_, nd.in1, nd.out_rows * w1);
                    for (std::size_t r = 0; r < nd.out_rows; ++r)
                        for (std::size_t c = 0; c < w1; ++c)
                            db[r * w1 + c] += g[r * nd.out_cols + w0 + c];
                }
                break;
            }
            case OpKind::SliceCols: {
                std::size_t src_cols = nd.b;
                auto& da = grad_buf(grads_, nd.in0, nd.out_rows * src_cols);
                for (std::size_t r = 0; r < nd.out_rows; ++r)
                    for (std::size_t c = 0; c < nd.out_cols; ++c)
                        da[r * src_cols + nd.a + c] += g[r * nd.out_cols + c];
                break;
            }
            case OpKind::Transpose: {
                auto& da = grad_buf(grads_, nd.in0, g.size());
                for (std::size_t r = 0; r < nd.out_rows; ++r)
                    for (std::size_t c = 0; c < nd.out_cols; ++c)
                        da[c * nd.out_rows + r] += g[r * nd.out_cols + c];
                break;
            }
            case OpKind::SpMM: {
                const SparseMatrix& S = *nd.sparse;
                auto& da = grad_buf(grads_, nd.in0, S.n_cols * nd.out_cols);
                std::size_t m = nd.out_cols;
                for (std::size_t r = 0; r < S.n_rows; ++r) {
                    for (std::size_t k = S.offsets[r]; k < S.offsets[r + 1]; ++k) {
                        double v = S.vals[k];
                        std::size_t c = S.cols[k];
                        for (std::size_t j = 0; j < m; ++j)
                            da[c * m + j] += v * g[r * m + j];
                    }
                }
                break;
            }
            case OpKind::CrossEntropy: {
                const Tensor& P = nd.saved[0];  // softmax probs on masked rows
                auto& da = grad_buf(grads_, nd.in0, P.size());
                double inv_m = 1.0 / nd.scalar;
                std::size_t ncls = P.n_cols;
                for (std::size_t r = 0; r < P.n_rows; ++r) {
                    if (!nd.mask[r]) continue;
                    for (std::size_t c = 0; c < ncls; ++c) {
                        double p = P.data[r * ncls + c];
                        double onehot = (static_cast<int>(c) == nd.labels[r]) ? 1.0 : 0.0;
                        da[r * ncls + c] += g[0] * inv_m * (p - onehot);
                    }
                }
                break;
            }
            case OpKind::Leaf:
                break;
        }
    }
}

NoTape::NoTape() : saved_(g_active_tape) { g_active_tape = nullptr; }
NoTape::~NoTape() { g_active_tape = saved_; }

// ---------------------------------------------------------------------------
// Ops

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.n_cols != b.n_rows) {
        throw DimensionError("matmul: inner dimensions differ " + shape_str(a) + " * " +
                             shape_str(b));
    }
    std::size_t m = a.n_rows, k = a.n_cols, n = b.n_cols;
    Tensor out(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            double av = a.data[i * k + p];
            if (av == 0.0) continue;
            const double* brow = &b.data[p * n];
            double* orow = &out.data[i * n];
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    record_binary(OpKind::MatMul, a, b, out, {detached(a), detached(b)});
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape("add", a, b);
    Tensor out(a.n_rows, a.n_cols);
    for (std::size_t t = 0; t < out.size(); ++t) out.data[t] = a.data[t] + b.data[t];
    record_binary(OpKind::Add, a, b, out, {});
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape("sub", a, b);
    Tensor out(a.n_rows, a.n_cols);
    for (std::size_t t = 0; t < out.size(); ++t) out.data[t] = a.data[t] - b.data[t];
    record_binary(OpKind::Sub, a, b, out, {});
    return out;
}

Tensor mul_elementwise(const Tensor& a, const Tensor& b) {
    check_same_shape("mul_elementwise", a, b);
    Tensor out(a.n_rows, a.n_cols);
    for (std::size_t t = 0; t < out.size(); ++t) out.data[t] = a.data[t] * b.data[t];
    record_binary(OpKind::MulElementwise, a, b, out, {detached(a), detached(b)});
    return out;
}

Tensor scalar_mul(const Tensor& a, double s) {
    Tensor out(a.n_rows, a.n_cols);
    for (std::size_t t = 0; t < out.size(); ++t) out.data[t] = s * a.data[t];
    record_unary(OpKind::ScalarMul, a, out, {}, s);
    return out;
}

Tensor relu(const Tensor& a) {
    Tensor out(a.n_rows, a.n_cols);
    for (std::size_t t = 0; t < out.size(); ++t)
        out.data[t] = a.data[t] > 0.0 ? a.data[t] : 0.0;
    record_unary(OpKind::Relu, a, out, {detached(a)});
    return out;
}

Tensor tanh(const Tensor& a) {
    Tensor out(a.n_rows, a.n_cols);
    for (std::size_t t = 0; t < out.size(); ++t) out.data[t] = std::tanh(a.data[t]);
    record_unary(OpKind::Tanh, a, out, {detached(out)});
    return out;
}

Tensor sinh(const Tensor& a) {
    Tensor out(a.n_rows, a.n_cols);
    for (std::size_t t = 0; t < out.size(); ++t) out.data[t] = std::sinh(a.data[t]);
    record_unary(OpKind::Sinh, a, out, {detached(a)});
    return out;
}

Tensor cosh(const Tensor& a) {
    Tensor out(a.n_rows, a.n_cols);
    for (std::size_t t = 0; t < out.size(); ++t) out.data[t] = std::cosh(a.data[t]);
    record_unary(OpKind::Cosh, a, out, {detached(a)});
    return out;
}

Tensor arcosh(const Tensor& a) {
    Tensor clamped(a.n_rows, a.n_cols);
    for (std::size_t t = 0; t < a.size(); ++t) {
        double x = a.data[t];
        if (x < 1.0) {
            if (x >= 1.0 - kArcoshClampEps) {
                x = 1.0;
            } else {
                throw DomainError("arcosh: input " + std::to_string(x) + " below domain");
            }
        }
        clamped.data[t] = x;
    }
    Tensor out(a.n_rows, a.n_cols);
    for (std::size_t t = 0; t < out.size(); ++t) out.data[t] = std::acosh(clamped.data[t]);
    record_unary(OpKind::Arcosh, a, out, {clamped});
    return out;
}

Tensor artanh(const Tensor& a) {
    Tensor clamped(a.n_rows, a.n_cols);
    for (std::size_t t = 0; t < a.size(); ++t) {
        double x = a.data[t];
        double ax = std::abs(x);
        if (ax >= 1.0) {
            if (ax <= 1.0 + kArtanhClampEps) {
                x = (x > 0.0 ? 1.0 : -1.0) * (1.0 - kArtanhClampEps);
            } else {
                throw DomainError("artanh: input " + std::to_string(x) + " outside domain");
            }
        }
        clamped.data[t] = x;
    }
    Tensor out(a.n_rows, a.n_cols);
    for (std::size_t t = 0; t < out.size(); ++t) out.data[t] = std::atanh(clamped.data[t]);
    record_unary(OpKind::Artanh, a, out, {clamped});
    return out;
}

Tensor exp(const Tensor& a) {
    Tensor out(a.n_rows, a.n_cols);
    for (std::size_t t = 0; t < out.size(); ++t) out.data[t] = std::exp(a.data[t]);
    record_unary(OpKind::Exp, a, out, {detached(out)});
    return out;
}

Tensor log(const Tensor& a) {
    for (double v : a.data) {
        if (!(v > 0.0)) {
            throw DomainError("log: non-positive input " + std::to_string(v));
        }
    }
    Tensor out(a.n_rows, a.n_cols);
    for (std::size_t t = 0; t < out.size(); ++t) out.data[t] = std::log(a.data[t]);
    record_unary(OpKind::Log, a, out, {detached(a)});
    return out;
}

Tensor sqrt(const Tensor& a) {
    for (double v : a.data) {
        if (v < 0.0) {
            throw DomainError("sqrt: negative input " + std::to_string(v));
        }
    }
    Tensor out(a.n_rows, a.n_cols);
    for (std::size_t t = 0; t < out.size(); ++t) out.data[t] = std::sqrt(a.data[t]);
    record_unary(OpKind::Sqrt, a, out, {detached(out)});
    return out;
}

Tensor row_l2_norm(const Tensor& a) {
    Tensor out(a.n_rows, 1);
    for (std::size_t r = 0; r < a.n_rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < a.n_cols; ++c) {
            double v = a.at(r, c);
            s += v * v;
        }
        out.data[r] = std::sqrt(s);
    }
    record_unary(OpKind::RowL2Norm, a, out, {detached(a), detached(out)});
    return out;
}

Tensor softmax_rows(const Tensor& a) {
    Tensor out(a.n_rows, a.n_cols);
    for (std::size_t r = 0; r < a.n_rows; ++r) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < a.n_cols; ++c) mx = std::max(mx, a.at(r, c));
        double denom = 0.0;
        for (std::size_t c = 0; c < a.n_cols; ++c) {
            double e = std::exp(a.at(r, c) - mx);
            out.at(r, c) = e;
            denom += e;
        }
        for (std::size_t c = 0; c < a.n_cols; ++c) out.at(r, c) /= denom;
    }
    record_unary(OpKind::SoftmaxRows, a, out, {detached(out)});
    return out;
}

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data) s += v;
    Tensor out = Tensor::scalar(s);
    record_unary(OpKind::Sum, a, out, {}, 0.0, a.size());
    return out;
}

Tensor mean(const Tensor& a) {
    if (a.size() == 0) throw ContractError("mean: empty tensor");
    double s = 0.0;
    for (double v : a.data) s += v;
    Tensor out = Tensor::scalar(s / static_cast<double>(a.size()));
    record_unary(OpKind::Mean, a, out, {}, 0.0, a.size());
    return out;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    if (a.n_rows != b.n_rows) {
        throw DimensionError("concat_cols: row counts differ " + shape_str(a) + " vs " +
                             shape_str(b));
    }
    Tensor out(a.n_rows, a.n_cols + b.n_cols);
    for (std::size_t r = 0; r < a.n_rows; ++r) {
        for (std::size_t c = 0; c < a.n_cols; ++c) out.at(r, c) = a.at(r, c);
        for (std::size_t c = 0; c < b.n_cols; ++c) out.at(r, a.n_cols + c) = b.at(r, c);
    }
    record_binary(OpKind::ConcatCols, a, b, out, {}, a.n_cols);
    return out;
}

Tensor slice_cols(const Tensor& a, std::size_t col_begin, std::size_t col_end) {
    if (col_begin >= col_end || col_end > a.n_cols) {
        throw DimensionError("slice_cols: range [" + std::to_string(col_begin) + ", " +
                             std::to_string(col_end) + ") invalid for " + shape_str(a));
    }
    Tensor out(a.n_rows, col_end - col_begin);
    for (std::size_t r = 0; r < a.n_rows; ++r)
        for (std::size_t c = 0; c < out.n_cols; ++c)
            out.at(r, c) = a.at(r, col_begin + c);
    record_unary(OpKind::SliceCols, a, out, {}, 0.0, col_begin, a.n_cols);
    return out;
}

Tensor transpose(const Tensor& a) {
    Tensor out(a.n_cols, a.n_rows);
    for (std::size_t r = 0; r < a.n_rows; ++r)
        for (std::size_t c = 0; c < a.n_cols; ++c) out.at(c, r) = a.at(r, c);
    record_unary(OpKind::Transpose, a, out, {});
    return out;
}

Tensor spmm(const std::shared_ptr<const SparseMatrix>& s, const Tensor& x) {
    if (!s) throw ContractError("spmm: null sparse matrix");
    if (s->n_cols != x.n_rows) {
        throw DimensionError("spmm: inner dimensions differ (" + std::to_string(s->n_rows) +
                             "x" + std::to_string(s->n_cols) + ") * " + shape_str(x));
    }
    Tensor out(s->n_rows, x.n_cols);
    std::size_t m = x.n_cols;
    for (std::size_t r = 0; r < s->n_rows; ++r) {
        double* orow = &out.data[r * m];
        for (std::size_t k = s->offsets[r]; k < s->offsets[r + 1]; ++k) {
            double v = s->vals[k];
            const double* xrow = &x.data[s->cols[k] * m];
            for (std::size_t j = 0; j < m; ++j) orow[j] += v * xrow[j];
        }
    }
    if (bound_to_active(x)) {
        Tape::Node node;
        node.op = OpKind::SpMM;
        node.in0 = x.node;
        node.out_rows = out.n_rows;
        node.out_cols = out.n_cols;
        node.sparse = s;
        attach(out, g_active_tape->record(std::move(node)));
    }
    return out;
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                     const std::vector<std::uint8_t>& mask) {
    std::size_t n = logits.n_rows;
    std::size_t ncls = logits.n_cols;
    if (labels.size() != n || mask.size() != n) {
        throw DimensionError("cross_entropy: labels/mask length must equal row count");
    }
    std::size_t m = 0;
    for (std::uint8_t v : mask) m += v ? 1 : 0;
    if (m == 0) throw ContractError("cross_entropy: mask selects no rows");

    Tensor probs(n, ncls);
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        if (!mask[r]) continue;
        int y = labels[r];
        if (y < 0 || static_cast<std::size_t>(y) >= ncls) {
            throw ContractError("cross_entropy: label " + std::to_string(y) +
                                " out of range for " + std::to_string(ncls) + " classes");
        }
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < ncls; ++c) mx = std::max(mx, logits.at(r, c));
        double denom = 0.0;
        for (std::size_t c = 0; c < ncls; ++c) {
            double e = std::exp(logits.at(r, c) - mx);
            probs.at(r, c) = e;
            denom += e;
        }
        for (std::size_t c = 0; c < ncls; ++c) probs.at(r, c) /= denom;
        total += std::log(denom) - (logits.at(r, static_cast<std::size_t>(y)) - mx);
    }
    Tensor out = Tensor::scalar(total / static_cast<double>(m));
    if (bound_to_active(logits)) {
        Tape::Node node;
        node.op = OpKind::CrossEntropy;
        node.in0 = logits.node;
        node.out_rows = 1;
        node.out_cols = 1;
        node.saved = {probs};
        node.scalar = static_cast<double>(m);
        node.labels = labels;
        node.mask = mask;
        attach(out, g_active_tape->record(std::move(node)));
    }
    return out;
}

Tensor forward_primitive(OpKind kind, const std::vector<const Tensor*>& inputs,
                         const OpAttrs& attrs) {
    auto need = [&](std::size_t n) {
        if (inputs.size() != n) {
            throw ContractError("forward_primitive: op expects " + std::to_string(n) +
                                " inputs, got " + std::to_string(inputs.size()));
        }
    };
    switch (kind) {
        case OpKind::MatMul: need(2); return matmul(*inputs[0], *inputs[1]);
        case OpKind::Add: need(2); return add(*inputs[0], *inputs[1]);
        case OpKind::Sub: need(2); return sub(*inputs[0], *inputs[1]);
        case OpKind::MulElementwise: need(2); return mul_elementwise(*inputs[0], *inputs[1]);
        case OpKind::ScalarMul: need(1); return scalar_mul(*inputs[0], attrs.scalar);
        case OpKind::Relu: need(1); return relu(*inputs[0]);
        case OpKind::Tanh: need(1); return tanh(*inputs[0]);
        case OpKind::Sinh: need(1); return sinh(*inputs[0]);
        case OpKind::Cosh: need(1); return cosh(*inputs[0]);
        case OpKind::Arcosh: need(1); return arcosh(*inputs[0]);
        case OpKind::Artanh: need(1); return artanh(*inputs[0]);
        case OpKind::Exp: need(1); return exp(*inputs[0]);
        case OpKind::Log: need(1); return log(*inputs[0]);
        case OpKind::Sqrt: need(1); return sqrt(*inputs[0]);
        case OpKind::RowL2Norm: need(1); return row_l2_norm(*inputs[0]);
        case OpKind::SoftmaxRows: need(1); return softmax_rows(*inputs[0]);
        case OpKind::Sum: need(1); return sum(*inputs[0]);
        case OpKind::Mean: need(1); return mean(*inputs[0]);
        case OpKind::ConcatCols: need(2); return concat_cols(*inputs[0], *inputs[1]);
        case OpKind::SliceCols: need(1); return slice_cols(*inputs[0], attrs.col_begin, attrs.col_end);
        case OpKind::Transpose: need(1); return transpose(*inputs[0]);
        default:
            throw ContractError("forward_primitive: op is not a primitive");
    }
}

Tensor recip_pos(const Tensor& a) { return exp(scalar_mul(log(a), -1.0)); }

Tensor broadcast_rows(const Tensor& row, std::size_t n_rows) {
    if (row.n_rows != 1) throw DimensionError("broadcast_rows: input must be 1xk");
    return matmul(Tensor::ones(n_rows, 1), row);
}

Tensor broadcast_cols(const Tensor& col, std::size_t n_cols) {
    if (col.n_cols != 1) throw DimensionError("broadcast_cols: input must be nx1");
    return matmul(col, Tensor::ones(1, n_cols));
}

Tensor row_dot(const Tensor& a, const Tensor& b) {
    check_same_shape("row_dot", a, b);
    return matmul(mul_elementwise(a, b), Tensor::ones(a.n_cols, 1));
}

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                  double h) {
    std::vector<double> analytic;
    {
        Tensor xc(x.n_rows, x.n_cols, x.data);
        Tape tape;
        tape.watch(xc);
        Tensor loss = f(xc);
        if (loss.size() != 1) {
            throw ContractError("grad_check: f must return a scalar");
        }
        tape.backward(loss);
        analytic = tape.grad(xc);
    }

    NoTape guard;
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        Tensor xp(x.n_rows, x.n_cols, x.data);
        Tensor xm(x.n_rows, x.n_cols, x.data);
        xp.data[i] += h;
        xm.data[i] -= h;
        double fd = (f(xp).value() - f(xm).value()) / (2.0 * h);
        double denom = std::max({1.0, std::abs(analytic[i]), std::abs(fd)});
        worst = std::max(worst, std::abs(analytic[i] - fd) / denom);
    }
    return worst;
}

}  // namespace hypegt
