#include <catch2/catch_amalgamated.hpp>

#include "snowshr/adam.hpp"
#include "snowshr/ops.hpp"
#include "snowshr/params.hpp"
#include "snowshr/rng.hpp"
#include "snowshr/tensor.hpp"

using namespace snowshr;

TEST_CASE("tensor construction and shapes") {
    Tensor z = Tensor::zeros({2, 3, 4, 5});
    CHECK(z.size() == 120);
    CHECK(z.shape() == Shape{2, 3, 4, 5});
    for (float v : z.vec()) CHECK(v == 0.0f);

    Tensor f = Tensor::full({3}, 1.5f);
    CHECK(f.vec() == std::vector<float>{1.5f, 1.5f, 1.5f});

    CHECK(Tensor::scalar_of(2.0f).scalar() == 2.0f);
    CHECK_THROWS_AS(Tensor::from_data({2, 2}, {1.0f}), DimensionError);
    CHECK_THROWS_AS(Tensor::zeros({0, 3}), DimensionError);
}

TEST_CASE("tensor handles alias shared storage") {
    Tensor a = Tensor::full({2}, 1.0f);
    Tensor b = a;
    b.data()[0] = 5.0f;
    CHECK(a.data()[0] == 5.0f);

    Tensor c = a.detach_copy();
    c.data()[0] = 9.0f;
    CHECK(a.data()[0] == 5.0f);
    CHECK_FALSE(c.requires_grad());
}

TEST_CASE("backward accumulates through a reused input") {
    Tensor x = Tensor::from_data({2}, {1.0f, -2.0f});
    x.set_requires_grad(true);
    Tape tape;
    // y = x + x, loss = sum(y): dloss/dx = 2 everywhere
    Tensor y = add(&tape, x, x);
    Tensor loss = sum(&tape, y);
    backward(loss, tape);
    REQUIRE(x.has_grad());
    CHECK(x.grad()[0] == 2.0f);
    CHECK(x.grad()[1] == 2.0f);
}

TEST_CASE("backward requires a scalar loss") {
    Tensor x = Tensor::full({2}, 1.0f);
    x.set_requires_grad(true);
    Tape tape;
    Tensor y = add(&tape, x, x);
    CHECK_THROWS_AS(backward(y, tape), ContractError);
}

TEST_CASE("grads stay absent without requires_grad") {
    Tensor x = Tensor::full({2, 2}, 1.0f);
    Tape tape;
    Tensor y = relu(&tape, x);
    Tensor loss = sum(&tape, y);
    backward(loss, tape);
    CHECK_FALSE(x.has_grad());
    CHECK(tape.num_ops() == 0);
}

TEST_CASE("all_finite flags bad values") {
    Tensor x = Tensor::full({3}, 1.0f);
    CHECK(all_finite(x));
    x.data()[1] = std::numeric_limits<float>::infinity();
    CHECK_FALSE(all_finite(x));
    x.data()[1] = std::numeric_limits<float>::quiet_NaN();
    CHECK_FALSE(all_finite(x));
}

TEST_CASE("param set preserves insertion order and rejects duplicates") {
    ParamSet params;
    Tensor a = Tensor::full({2}, 1.0f);
    Tensor b = Tensor::full({3}, 2.0f);
    params.add("w", a);
    params.add("b", b);
    CHECK(params.size() == 2);
    CHECK(params.names() == std::vector<std::string>{"w", "b"});
    CHECK(params.at("b").size() == 3);
    CHECK(params.total_elements() == 5);
    CHECK(a.requires_grad());
    CHECK_THROWS_AS(params.add("w", b), ContractError);
    CHECK_THROWS_AS(params.at("missing"), ContractError);
}

TEST_CASE("adam takes the documented first step") {
    // With constant grad g, the bias-corrected first step is exactly
    // -lr * g / (|g| + eps) regardless of g's magnitude.
    ParamSet params;
    Tensor w = Tensor::from_data({2}, {1.0f, -3.0f});
    params.add("w", w);
    w.ensure_grad();
    w.grad()[0] = 0.5f;
    w.grad()[1] = -0.125f;

    AdamConfig cfg;
    cfg.lr = 0.1f;
    AdamState state(cfg);
    state.step(params);
    CHECK_THAT(w.data()[0], Catch::Matchers::WithinAbs(1.0 - 0.1, 1e-5));
    CHECK_THAT(w.data()[1], Catch::Matchers::WithinAbs(-3.0 + 0.1, 1e-5));
}

TEST_CASE("adam skips parameters without grads") {
    ParamSet params;
    Tensor w = Tensor::full({2}, 1.0f);
    params.add("w", w);
    AdamState state;
    state.step(params);
    CHECK(w.data()[0] == 1.0f);
}

TEST_CASE("rng streams are deterministic and fork independently") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) REQUIRE(a.uniform() == b.uniform());

    Rng c(42);
    Rng f1 = c.fork(1), f2 = c.fork(2);
    CHECK(f1.uniform() != f2.uniform());

    Rng d(7);
    for (int i = 0; i < 1000; ++i) {
        const int v = d.uniform_int(3, 9);
        REQUIRE(v >= 3);
        REQUIRE(v <= 9);
    }

    // normals should have roughly the requested moments
    Rng e(9);
    double mean = 0.0, var = 0.0;
    const int n = 20000;
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i) xs[i] = e.normalf(2.0f, 3.0f);
    for (double v : xs) mean += v / n;
    for (double v : xs) var += (v - mean) * (v - mean) / n;
    CHECK_THAT(mean, Catch::Matchers::WithinAbs(2.0, 0.1));
    CHECK_THAT(std::sqrt(var), Catch::Matchers::WithinAbs(3.0, 0.1));
}
