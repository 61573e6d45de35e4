#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hypegt/errors.hpp"

namespace hypegt {

class Tape;

// Dense row-major matrix of doubles. Everything is 2-D; scalars are 1x1.
// A tensor may be bound to a tape node, in which case ops consuming it are
// recorded for reverse-mode differentiation.
struct Tensor {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<double> data;
    bool requires_grad = false;

    Tape* tape = nullptr;
    std::uint64_t tape_serial = 0;
    int node = -1;

    Tensor() = default;
    Tensor(std::size_t rows, std::size_t cols);
    Tensor(std::size_t rows, std::size_t cols, std::vector<double> values);

    static Tensor zeros(std::size_t rows, std::size_t cols);
    static Tensor ones(std::size_t rows, std::size_t cols);
    static Tensor full(std::size_t rows, std::size_t cols, double value);
    static Tensor identity(std::size_t n);
    static Tensor scalar(double value);
    static Tensor row(std::vector<double> values);
    static Tensor column(std::vector<double> values);

    std::size_t rows() const { return n_rows; }
    std::size_t cols() const { return n_cols; }
    std::size_t size() const { return data.size(); }

    double& at(std::size_t r, std::size_t c) { return data[r * n_cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * n_cols + c]; }
    double value() const;  // scalar accessor

    bool same_shape(const Tensor& other) const {
        return n_rows == other.n_rows && n_cols == other.n_cols;
    }

    // True when bound to the currently active tape.
    bool tracked() const;
};

// CSR sparse matrix used as a constant (non-differentiable) left operand.
struct SparseMatrix {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<std::size_t> offsets;  // n_rows + 1
    std::vector<std::size_t> cols;
    std::vector<double> vals;

    Tensor to_dense() const;
};

enum class OpKind {
    Leaf,
    MatMul,
    Add,
    Sub,
    MulElementwise,
    ScalarMul,
    Relu,
    Tanh,
    Sinh,
    Cosh,
    Arcosh,
    Artanh,
    Exp,
    Log,
    Sqrt,
    RowL2Norm,
    SoftmaxRows,
    Sum,
    Mean,
    ConcatCols,
    SliceCols,
    Transpose,
    SpMM,
    CrossEntropy,
};

// Reverse-mode tape. Constructing a Tape makes it the active tape for the
// current thread; destruction restores the previous one. Ops are recorded
// only when at least one operand is bound to the active tape via watch().
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Bind a leaf tensor to this tape. Idempotent.
    void watch(Tensor& t);

    // Run reverse accumulation from a scalar loss.
    void backward(const Tensor& loss);

    // Gradient of the loss w.r.t. a tensor bound to this tape. Watched
    // tensors that do not influence the loss get a zero gradient.
    const std::vector<double>& grad(const Tensor& t) const;

    std::size_t num_nodes() const { return nodes_.size(); }
    std::uint64_t serial() const { return serial_; }

    static Tape* active();

    struct Node {
        OpKind op = OpKind::Leaf;
        int in0 = -1;
        int in1 = -1;
        std::size_t out_rows = 0;
        std::size_t out_cols = 0;
        // Values captured at record time, as needed by each op's backward.
        std::vector<Tensor> saved;
        double scalar = 0.0;
        std::size_t a = 0;
        std::size_t b = 0;
        std::shared_ptr<const SparseMatrix> sparse;
        std::vector<int> labels;
        std::vector<std::uint8_t> mask;
    };

    int record(Node node);

private:
    std::vector<Node> nodes_;
    mutable std::vector<std::vector<double>> grads_;
    bool ran_backward_ = false;
    std::uint64_t serial_ = 0;
    Tape* previous_ = nullptr;
};

// Temporarily disables recording (used for finite differences and pure
// evaluation passes).
class NoTape {
public:
    NoTape();
    ~NoTape();
    NoTape(const NoTape&) = delete;
    NoTape& operator=(const NoTape&) = delete;

private:
    Tape* saved_;
};

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul_elementwise(const Tensor& a, const Tensor& b);
Tensor scalar_mul(const Tensor& a, double s);
Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sinh(const Tensor& a);
Tensor cosh(const Tensor& a);
Tensor arcosh(const Tensor& a);
Tensor artanh(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor row_l2_norm(const Tensor& a);
Tensor softmax_rows(const Tensor& a);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& a, std::size_t col_begin, std::size_t col_end);
Tensor transpose(const Tensor& a);

// Sparse-dense product with a constant CSR left operand.
Tensor spmm(const std::shared_ptr<const SparseMatrix>& s, const Tensor& x);

// Masked mean cross-entropy over rows of logits (numerically stabilized).
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                     const std::vector<std::uint8_t>& mask);

// Optional attributes for the generic dispatcher below.
struct OpAttrs {
    double scalar = 0.0;
    std::size_t col_begin = 0;
    std::size_t col_end = 0;
};

// Uniform entry point over the primitive op set; named functions above are
// the preferred API.
Tensor forward_primitive(OpKind kind, const std::vector<const Tensor*>& inputs,
                         const OpAttrs& attrs = {});

// 1 / x for strictly positive x, composed from primitives.
Tensor recip_pos(const Tensor& a);

// Composite broadcast/reduction helpers built on the primitives.
Tensor broadcast_rows(const Tensor& row, std::size_t n_rows);  // 1xk -> nxk
Tensor broadcast_cols(const Tensor& col, std::size_t n_cols);  // nx1 -> nxk
Tensor row_dot(const Tensor& a, const Tensor& b);              // nxk, nxk -> nx1

// Max relative error between tape gradients of f and central differences
// with step h, maximized over all entries of x. f must return a scalar.
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                  double h = 1e-5);

}  // namespace hypegt
