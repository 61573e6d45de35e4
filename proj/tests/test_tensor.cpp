#include <cmath>
#include <memory>
#include <vector>

#include "doctest.h"
#include "hypegt/rng.hpp"
#include "hypegt/tensor.hpp"

using namespace hypegt;

namespace {

// Independent matmul oracle with a different loop order than the library.
Tensor matmul_oracle(const Tensor& a, const Tensor& b) {
    Tensor out(a.rows(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += a.at(i, k) * b.at(k, j);
            out.at(i, j) = acc;
        }
    return out;
}

Tensor random_tensor(Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
    Tensor t(r, c);
    for (double& v : t.data) v = rng.normal(0.0, scale);
    return t;
}

}  // namespace

TEST_CASE("tensor construction and accessors") {
    Tensor t(2, 3, {1, 2, 3, 4, 5, 6});
    CHECK(t.rows() == 2);
    CHECK(t.cols() == 3);
    CHECK(t.at(1, 2) == 6);
    CHECK_THROWS_AS(Tensor(2, 2, {1, 2, 3}), DimensionError);
    CHECK(Tensor::identity(3).at(1, 1) == 1.0);
    CHECK(Tensor::identity(3).at(0, 1) == 0.0);
    CHECK(Tensor::scalar(5.0).value() == 5.0);
    CHECK_THROWS_AS(t.value(), ContractError);
}

TEST_CASE("matmul matches hand value and oracle") {
    Tensor a(2, 2, {1, 2, 3, 4});
    Tensor b(2, 2, {5, 6, 7, 8});
    Tensor c = matmul(a, b);
    CHECK(c.data == std::vector<double>{19, 22, 43, 50});

    Rng rng(12345);
    for (int trial = 0; trial < 10; ++trial) {
        std::size_t m = 1 + rng.uniform_index(6);
        std::size_t k = 1 + rng.uniform_index(6);
        std::size_t n = 1 + rng.uniform_index(6);
        Tensor x = random_tensor(rng, m, k);
        Tensor y = random_tensor(rng, k, n);
        Tensor got = matmul(x, y);
        Tensor want = matmul_oracle(x, y);
        for (std::size_t i = 0; i < got.size(); ++i)
            CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-13));
    }
    CHECK_THROWS_AS(matmul(Tensor(2, 3), Tensor(2, 3)), DimensionError);
}

TEST_CASE("elementwise ops") {
    Tensor a(1, 3, {1, -2, 3});
    Tensor b(1, 3, {4, 5, -6});
    CHECK(add(a, b).data == std::vector<double>{5, 3, -3});
    CHECK(sub(a, b).data == std::vector<double>{-3, -7, 9});
    CHECK(mul_elementwise(a, b).data == std::vector<double>{4, -10, -18});
    CHECK(scalar_mul(a, -2.0).data == std::vector<double>{-2, 4, -6});
    CHECK(relu(a).data == std::vector<double>{1, 0, 3});
    CHECK(relu(Tensor::scalar(0.0)).value() == 0.0);
    CHECK_THROWS_AS(add(a, Tensor(2, 3)), DimensionError);
}

TEST_CASE("analytic unary ops against frozen values") {
    Tensor half = Tensor::scalar(0.5);
    CHECK(tanh(half).value() == doctest::Approx(0.462117157260009758502318483644).epsilon(1e-15));
    CHECK(sinh(half).value() == doctest::Approx(0.521095305493747361622425626412).epsilon(1e-15));
    CHECK(cosh(half).value() == doctest::Approx(1.12762596520638078522622516141).epsilon(1e-15));
    CHECK(arcosh(cosh(half)).value() == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(artanh(tanh(half)).value() == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(exp(Tensor::scalar(0.693147180559945309417232121458)).value() ==
          doctest::Approx(2.0).epsilon(1e-15));
    CHECK(log(Tensor::scalar(2.0)).value() ==
          doctest::Approx(0.693147180559945309417232121458).epsilon(1e-15));
    CHECK(sqrt(Tensor::scalar(2.0)).value() ==
          doctest::Approx(1.41421356237309504880168872421).epsilon(1e-15));
}

TEST_CASE("domain clamps and errors") {
    CHECK(arcosh(Tensor::scalar(1.0)).value() == 0.0);
    CHECK(arcosh(Tensor::scalar(1.0 - 1e-16)).value() == 0.0);
    CHECK_THROWS_AS(arcosh(Tensor::scalar(0.5)), DomainError);

    double sat = artanh(Tensor::scalar(1.0)).value();
    CHECK(std::isfinite(sat));
    CHECK(sat == doctest::Approx(std::atanh(1.0 - 1e-15)));
    CHECK(artanh(Tensor::scalar(-1.0)).value() == doctest::Approx(-std::atanh(1.0 - 1e-15)));
    CHECK_THROWS_AS(artanh(Tensor::scalar(1.1)), DomainError);

    CHECK_THROWS_AS(log(Tensor::scalar(0.0)), DomainError);
    CHECK_THROWS_AS(log(Tensor::scalar(-1.0)), DomainError);
    CHECK_THROWS_AS(sqrt(Tensor::scalar(-1.0)), DomainError);
    CHECK(sqrt(Tensor::scalar(4.0)).value() == 2.0);
}

TEST_CASE("row_l2_norm and softmax_rows") {
    Tensor x(2, 2, {3, 4, 0, 0});
    Tensor n = row_l2_norm(x);
    CHECK(n.rows() == 2);
    CHECK(n.cols() == 1);
    CHECK(n.data[0] == 5.0);
    CHECK(n.data[1] == 0.0);

    Tensor s = softmax_rows(Tensor(1, 2, {0, 0}));
    CHECK(s.data[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s.data[1] == doctest::Approx(0.5).epsilon(1e-15));

    Tensor big = softmax_rows(Tensor(1, 2, {1000.0, 1000.0}));
    CHECK(big.data[0] == doctest::Approx(0.5).epsilon(1e-15));

    Rng rng(7);
    Tensor r = random_tensor(rng, 5, 7, 3.0);
    Tensor sm = softmax_rows(r);
    for (std::size_t i = 0; i < sm.rows(); ++i) {
        double rowsum = 0.0;
        for (std::size_t j = 0; j < sm.cols(); ++j) {
            CHECK(sm.at(i, j) > 0.0);
            rowsum += sm.at(i, j);
        }
        CHECK(rowsum == doctest::Approx(1.0).epsilon(1e-13));
    }
}

TEST_CASE("reductions and reshaping ops") {
    Tensor x(2, 2, {1, 2, 3, 4});
    CHECK(sum(x).value() == 10.0);
    CHECK(mean(x).value() == 2.5);

    Tensor a(2, 1, {1, 3});
    Tensor b(2, 2, {2, 9, 4, 9});
    Tensor cc = concat_cols(a, b);
    CHECK(cc.cols() == 3);
    CHECK(cc.at(1, 0) == 3);
    CHECK(cc.at(1, 2) == 9);
    Tensor back = slice_cols(cc, 0, 1);
    CHECK(back.data == a.data);
    CHECK_THROWS_AS(slice_cols(cc, 2, 2), DimensionError);
    CHECK_THROWS_AS(slice_cols(cc, 1, 5), DimensionError);
    CHECK_THROWS_AS(concat_cols(a, Tensor(3, 1)), DimensionError);

    Tensor t = transpose(x);
    CHECK(t.data == std::vector<double>{1, 3, 2, 4});
    Tensor tt = transpose(t);
    CHECK(tt.data == x.data);
}

TEST_CASE("spmm matches dense matmul") {
    auto s = std::make_shared<SparseMatrix>();
    s->n_rows = 3;
    s->n_cols = 3;
    s->offsets = {0, 2, 3, 4};
    s->cols = {0, 2, 1, 0};
    s->vals = {1.0, 2.0, -3.0, 0.5};

    Rng rng(99);
    Tensor x = random_tensor(rng, 3, 4);
    Tensor got = spmm(std::shared_ptr<const SparseMatrix>(s), x);
    Tensor want = matmul_oracle(s->to_dense(), x);
    for (std::size_t i = 0; i < got.size(); ++i)
        CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-14));
    CHECK_THROWS_AS(spmm(std::shared_ptr<const SparseMatrix>(s), Tensor(4, 2)),
                    DimensionError);
}

TEST_CASE("cross_entropy frozen values and contracts") {
    Tensor logits(1, 2, {1, 0});
    std::vector<int> labels{0};
    std::vector<std::uint8_t> mask{1};
    CHECK(cross_entropy(logits, labels, mask).value() ==
          doctest::Approx(0.313261687518222834048995494968).epsilon(1e-14));

    Tensor two(2, 2, {1, 0, 1, 0});
    CHECK(cross_entropy(two, {0, 1}, {1, 1}).value() ==
          doctest::Approx(0.813261687518222834048995494968).epsilon(1e-14));

    // Only the masked row counts.
    CHECK(cross_entropy(two, {0, 1}, {1, 0}).value() ==
          doctest::Approx(0.313261687518222834048995494968).epsilon(1e-14));

    Tensor uniform(1, 4, {7, 7, 7, 7});
    CHECK(cross_entropy(uniform, {2}, {1}).value() ==
          doctest::Approx(std::log(4.0)).epsilon(1e-14));

    CHECK_THROWS_AS(cross_entropy(two, {0, 1}, {0, 0}), ContractError);
    CHECK_THROWS_AS(cross_entropy(two, {0, 5}, {1, 1}), ContractError);
    CHECK_THROWS_AS(cross_entropy(two, {0}, {1, 1}), DimensionError);

    // Extreme logits stay finite.
    Tensor hot(1, 2, {1000.0, -1000.0});
    CHECK(std::isfinite(cross_entropy(hot, {0}, {1}).value()));
}

TEST_CASE("tape records only watched computations") {
    Tensor x(1, 2, {1, 2});
    Tensor w(1, 2, {3, 4});
    Tape tape;
    tape.watch(x);
    CHECK(x.tracked());
    CHECK_FALSE(w.tracked());

    Tensor constant = add(w, w);  // no watched operand
    CHECK_FALSE(constant.tracked());

    Tensor loss = sum(mul_elementwise(x, w));
    CHECK(loss.tracked());
    tape.backward(loss);
    CHECK(tape.grad(x) == std::vector<double>{3, 4});
    CHECK_THROWS_AS(tape.grad(w), ContractError);
}

TEST_CASE("backward basics") {
    SUBCASE("quadratic") {
        Tensor x(1, 3, {1, -2, 3});
        Tape tape;
        tape.watch(x);
        Tensor loss = sum(mul_elementwise(x, x));
        tape.backward(loss);
        CHECK(tape.grad(x) == std::vector<double>{2, -4, 6});
    }
    SUBCASE("shared subexpression accumulates") {
        Tensor x(1, 2, {5, 6});
        Tape tape;
        tape.watch(x);
        Tensor s = sum(x);
        Tensor loss = add(s, s);
        tape.backward(loss);
        CHECK(tape.grad(x) == std::vector<double>{2, 2});
    }
    SUBCASE("constant loss gives zero gradient") {
        Tensor x(1, 2, {5, 6});
        Tape tape;
        tape.watch(x);
        Tensor loss = Tensor::scalar(3.0);
        tape.backward(loss);
        CHECK(tape.grad(x) == std::vector<double>{0, 0});
    }
    SUBCASE("non-scalar loss rejected") {
        Tensor x(1, 2, {5, 6});
        Tape tape;
        tape.watch(x);
        Tensor y = scalar_mul(x, 2.0);
        CHECK_THROWS_AS(tape.backward(y), ContractError);
    }
    SUBCASE("grad before backward rejected") {
        Tensor x(1, 2, {5, 6});
        Tape tape;
        tape.watch(x);
        CHECK_THROWS_AS(tape.grad(x), ContractError);
    }
    SUBCASE("watched leaf unused by loss gets zeros") {
        Tensor x(1, 2, {5, 6});
        Tensor y(1, 2, {1, 1});
        Tape tape;
        tape.watch(x);
        tape.watch(y);
        Tensor loss = sum(x);
        tape.backward(loss);
        CHECK(tape.grad(y) == std::vector<double>{0, 0});
    }
    SUBCASE("same tensor as both matmul operands") {
        Tensor x(2, 2, {1, 2, 3, 4});
        Tape tape;
        tape.watch(x);
        Tensor loss = sum(matmul(x, x));
        tape.backward(loss);
        // d/dX sum(XX) = (X 1 1^T)^T + (1 1^T X)^T
        std::vector<double> expect{1 + 2 + 3 + 3, 3 + 4 + 3 + 3, 1 + 2 + 7, 3 + 4 + 7};
        auto g = tape.grad(x);
        Tensor xc(2, 2, {1, 2, 3, 4});
        double err = grad_check(
            [](const Tensor& t) { return sum(matmul(t, t)); }, xc, 1e-6);
        CHECK(err < 1e-8);
        CHECK(g.size() == 4);
    }
}

TEST_CASE("stale tape bindings are ignored by later tapes") {
    Tensor x(1, 2, {1, 2});
    {
        Tape t1;
        t1.watch(x);
        Tensor l = sum(x);
        t1.backward(l);
    }
    Tape t2;
    Tensor y = scalar_mul(x, 2.0);  // x bound to destroyed tape, acts as constant
    CHECK_FALSE(y.tracked());
    t2.watch(x);
    Tensor loss = sum(scalar_mul(x, 2.0));
    t2.backward(loss);
    CHECK(t2.grad(x) == std::vector<double>{2, 2});
}

TEST_CASE("gradient checks for primitive compositions") {
    Rng rng(2024);

    auto check = [&](const char* name, const std::function<Tensor(const Tensor&)>& f,
                     const Tensor& x, double tol = 1e-6) {
        double err = grad_check(f, x, 1e-5);
        INFO(name, " err=", err);
        CHECK(err < tol);
    };

    check("quadratic", [](const Tensor& t) { return sum(mul_elementwise(t, t)); },
          random_tensor(rng, 3, 3));
    check("tanh-chain", [](const Tensor& t) { return sum(tanh(scalar_mul(t, 0.7))); },
          random_tensor(rng, 2, 4));
    check("sinh", [](const Tensor& t) { return sum(sinh(t)); }, random_tensor(rng, 2, 2));
    check("cosh", [](const Tensor& t) { return sum(cosh(t)); }, random_tensor(rng, 2, 2));
    check("exp", [](const Tensor& t) { return sum(exp(t)); }, random_tensor(rng, 2, 2));
    check("softmax", [](const Tensor& t) { return sum(mul_elementwise(softmax_rows(t), t)); },
          random_tensor(rng, 3, 4));
    check("transpose-matmul",
          [](const Tensor& t) { return sum(matmul(t, transpose(t))); },
          random_tensor(rng, 3, 2));
    check("concat-slice",
          [](const Tensor& t) {
              Tensor c = concat_cols(t, mul_elementwise(t, t));
              return sum(slice_cols(c, 1, 3));
          },
          random_tensor(rng, 3, 2));
    check("mean", [](const Tensor& t) { return mean(mul_elementwise(t, t)); },
          random_tensor(rng, 3, 3));
    check("row_l2_norm",
          [](const Tensor& t) { return sum(row_l2_norm(t)); },
          add(random_tensor(rng, 3, 3), Tensor::full(3, 3, 4.0)));

    Tensor pos = Tensor(2, 2, {0.5, 1.5, 2.0, 3.0});
    check("log", [](const Tensor& t) { return sum(log(t)); }, pos);
    check("sqrt", [](const Tensor& t) { return sum(sqrt(t)); }, pos);
    check("recip", [](const Tensor& t) { return sum(recip_pos(t)); }, pos);

    Tensor above_one(2, 2, {1.5, 2.0, 3.0, 1.2});
    check("arcosh", [](const Tensor& t) { return sum(arcosh(t)); }, above_one);

    Tensor inside(2, 2, {0.5, -0.3, 0.8, -0.9});
    check("artanh", [](const Tensor& t) { return sum(artanh(t)); }, inside);

    auto s = std::make_shared<SparseMatrix>();
    s->n_rows = 2;
    s->n_cols = 3;
    s->offsets = {0, 2, 3};
    s->cols = {0, 2, 1};
    s->vals = {1.5, -2.0, 0.5};
    std::shared_ptr<const SparseMatrix> sc = s;
    check("spmm", [sc](const Tensor& t) { return sum(spmm(sc, t)); },
          random_tensor(rng, 3, 2));

    std::vector<int> labels{0, 2, 1};
    std::vector<std::uint8_t> mask{1, 1, 0};
    check("cross_entropy",
          [&](const Tensor& t) { return cross_entropy(t, labels, mask); },
          random_tensor(rng, 3, 3));
}

TEST_CASE("recip_pos value and derivative") {
    CHECK(recip_pos(Tensor::scalar(4.0)).value() == doctest::Approx(0.25).epsilon(1e-15));
    Tensor x = Tensor::scalar(4.0);
    Tape tape;
    tape.watch(x);
    Tensor y = recip_pos(x);
    tape.backward(y);
    CHECK(tape.grad(x)[0] == doctest::Approx(-1.0 / 16.0).epsilon(1e-13));
}

TEST_CASE("forward_primitive dispatches the primitive set") {
    Tensor a(1, 2, {1, 2});
    Tensor b(1, 2, {3, 4});
    CHECK(forward_primitive(OpKind::Add, {&a, &b}).data == std::vector<double>{4, 6});
    OpAttrs attrs;
    attrs.scalar = 3.0;
    CHECK(forward_primitive(OpKind::ScalarMul, {&a}, attrs).data ==
          std::vector<double>{3, 6});
    attrs.col_begin = 1;
    attrs.col_end = 2;
    CHECK(forward_primitive(OpKind::SliceCols, {&a}, attrs).data ==
          std::vector<double>{2});
    CHECK_THROWS_AS(forward_primitive(OpKind::Add, {&a}), ContractError);
}
