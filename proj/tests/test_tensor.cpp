#include <cmath>
#include <cstdio>

#include "doctest.h"
#include "flagforge/nn.hpp"

using namespace flagforge;

TEST_CASE("rng is deterministic and platform independent") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(42);
    for (int i = 0; i < 100; ++i) {
        double u = c.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("relu clamps negatives and zero") {
    Tensor x = Tensor::from(1, 3, {-1.0, 0.0, 2.0});
    Tensor y = relu(x);
    CHECK(y.data() == std::vector<double>{0.0, 0.0, 2.0});
}

TEST_CASE("row_softmax of a zero row is uniform") {
    Tensor y = row_softmax(Tensor::zeros(1, 4));
    for (int j = 0; j < 4; ++j) CHECK(y.at(0, j) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("matmul matches the hand-computed table") {
    Tensor a = Tensor::from(2, 3, {1, 2, 3, 4, 5, 6});
    Tensor b = Tensor::from(3, 2, {7, 8, 9, 10, 11, 12});
    Tensor c = matmul(a, b);
    // worked out by hand: [[58, 64], [139, 154]]
    CHECK(c.at(0, 0) == 58);
    CHECK(c.at(0, 1) == 64);
    CHECK(c.at(1, 0) == 139);
    CHECK(c.at(1, 1) == 154);
    CHECK_THROWS_AS(matmul(a, a), ShapeMismatch);
}

TEST_CASE("add broadcasts a bias row") {
    Tensor a = Tensor::from(2, 2, {1, 2, 3, 4});
    Tensor b = Tensor::from(1, 2, {10, 20});
    Tensor c = add(a, b);
    CHECK(c.data() == std::vector<double>{11, 22, 13, 24});
    CHECK_THROWS_AS(add(a, Tensor::zeros(3, 2)), ShapeMismatch);
}

TEST_CASE("sum gradient is all ones") {
    Tensor w = Tensor::from(2, 3, {1, -2, 3, -4, 5, -6}, true);
    backward(sum(w));
    for (double g : w.grad()) CHECK(g == 1.0);
}

TEST_CASE("relu subgradient is the positive indicator") {
    Tensor w = Tensor::from(1, 4, {-1.0, 0.0, 0.5, 2.0}, true);
    backward(sum(relu(w)));
    CHECK(w.grad() == std::vector<double>{0.0, 0.0, 1.0, 1.0});
}

TEST_CASE("backward requires a scalar loss and resets stale grads") {
    Tensor w = Tensor::from(2, 2, {1, 2, 3, 4}, true);
    CHECK_THROWS_AS(backward(relu(w)), NotScalarLoss);
    backward(sum(w));
    backward(sum(w));  // grads must not accumulate across sweeps
    for (double g : w.grad()) CHECK(g == 1.0);
}

TEST_CASE("non-finite results are rejected") {
    Tensor big = Tensor::from(1, 1, {1e308});
    CHECK_THROWS_AS(matmul(big, Tensor::from(1, 1, {1e308})), NonFiniteValue);
    CHECK_THROWS_AS(Tensor::from(1, 1, {std::nan("")}), NonFiniteValue);
}

TEST_CASE("dropout is the identity in eval mode and masks in train mode") {
    Rng rng(7);
    Tensor x = Tensor::from(1, 8, {1, 2, 3, 4, 5, 6, 7, 8});
    Tensor eval = dropout(x, 0.5, false, rng);
    CHECK(eval.impl() == x.impl());  // exact identity, same tensor
    Tensor train = dropout(x, 0.5, true, rng);
    for (std::size_t i = 0; i < 8; ++i) {
        double v = train.data()[i];
        CHECK((v == 0.0 || v == doctest::Approx(x.data()[i] * 2.0)));
    }
}

TEST_CASE("mean_over_rows averages groups and zeroes empty groups") {
    Tensor x = Tensor::from(3, 2, {1, 2, 3, 4, 5, 6});
    Tensor y = mean_over_rows(x, {{0, 2}, {}, {1}});
    CHECK(y.at(0, 0) == 3.0);
    CHECK(y.at(0, 1) == 4.0);
    CHECK(y.at(1, 0) == 0.0);
    CHECK(y.at(2, 1) == 4.0);
}

TEST_CASE("segment_softmax normalizes within each segment") {
    Tensor logits = Tensor::from(4, 1, {0.3, 1.7, -2.0, 0.4});
    Tensor alpha = segment_softmax(logits, {0, 0, 1, 1}, 2);
    CHECK(alpha.at(0, 0) + alpha.at(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(alpha.at(2, 0) + alpha.at(3, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(alpha.at(1, 0) > alpha.at(0, 0));
}

TEST_CASE("neg_log_likelihood on a uniform binary row is log 2") {
    Tensor probs = Tensor::from(1, 2, {0.5, 0.5});
    CHECK(neg_log_likelihood(probs, {0}).item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(neg_log_likelihood(probs, {5}), ShapeMismatch);
}

TEST_CASE("class weights reweight and renormalize the loss") {
    Tensor probs = Tensor::from(2, 2, {0.5, 0.5, 0.25, 0.75});
    // weights (2, 1): loss = (2*ln2 + 1*ln(4/3)) / 3
    double expected = (2.0 * std::log(2.0) + std::log(4.0 / 3.0)) / 3.0;
    CHECK(neg_log_likelihood(probs, {0, 1}, {2.0, 1.0}).item() ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("random MLP passes the finite-difference check") {
    Rng rng(99);
    Tensor w1 = Tensor::glorot(3, 5, rng);
    Tensor b1 = Tensor::glorot(1, 5, rng);
    Tensor w2 = Tensor::glorot(5, 2, rng);
    Tensor x = Tensor::from(4, 3, {0.1, -0.2, 0.3, 0.7, 0.5, -0.9, 0.2, 0.2, 0.4, -0.6, 0.1, 0.8});
    auto forward = [&] {
        return neg_log_likelihood(row_softmax(matmul(relu(add(matmul(x, w1), b1)), w2)),
                                  {0, 1, 1, 0});
    };
    CHECK(grad_check(forward, {w1, b1, w2}) < 1e-5);
}

TEST_CASE("identity-style loss has error below float noise") {
    Tensor w = Tensor::from(2, 2, {0.4, -0.3, 0.7, 0.1}, true);
    auto forward = [&] { return sum(w); };
    CHECK(grad_check(forward, {w}) < 1e-10);
}

TEST_CASE("adam leaves parameters untouched for zero gradient and zero decay") {
    Tensor p = Tensor::from(1, 3, {1.0, -2.0, 3.0}, true);
    std::vector<Tensor> params{p};
    zero_grads(params);
    AdamState adam;
    adam.lr = 0.1;
    adam_step(params, adam);
    adam_step(params, adam);
    CHECK(p.data() == std::vector<double>{1.0, -2.0, 3.0});
    CHECK(adam.step == 2);
}

TEST_CASE("single adam step matches the closed form") {
    Tensor p = Tensor::from(1, 1, {1.0}, true);
    std::vector<Tensor> params{p};
    p.grad().assign(1, 1.0);
    AdamState adam;
    adam.lr = 0.1;
    adam_step(params, adam);
    // bias-corrected m_hat = v_hat = 1, so p -= lr * 1 / (1 + eps)
    CHECK(p.data()[0] == doctest::Approx(0.9).epsilon(1e-9));
}

TEST_CASE("weight decay is decoupled from the gradient path") {
    Tensor p = Tensor::from(1, 1, {2.0}, true);
    std::vector<Tensor> params{p};
    zero_grads(params);
    AdamState adam;
    adam.lr = 0.1;
    adam.weight_decay = 0.5;
    adam_step(params, adam);
    // zero gradient: only the decay term moves the parameter
    CHECK(p.data()[0] == doctest::Approx(2.0 - 0.1 * 0.5 * 2.0).epsilon(1e-12));
}

TEST_CASE("checkpoints round-trip exactly") {
    Rng rng(5);
    Checkpoint ckpt;
    ckpt.seed = 123;
    ckpt.config_hash = "abcd";
    ckpt.params.emplace_back("w", Tensor::glorot(3, 4, rng));
    ckpt.params.emplace_back("b", Tensor::glorot(1, 4, rng));
    ckpt.adam.step = 17;
    ckpt.adam.lr = 3e-4;
    ckpt.adam.weight_decay = 1e-5;
    ckpt.adam.m = {std::vector<double>(12, 0.25), std::vector<double>(4, -0.5)};
    ckpt.adam.v = {std::vector<double>(12, 0.75), std::vector<double>(4, 0.125)};

    std::string path = "/tmp/flagforge_test_ckpt.bin";
    save_checkpoint(path, ckpt);
    Checkpoint back = load_checkpoint(path);
    REQUIRE(back.params.size() == 2);
    CHECK(back.seed == 123);
    CHECK(back.config_hash == "abcd");
    CHECK(back.params[0].first == "w");
    CHECK(back.params[0].second.data() == ckpt.params[0].second.data());
    CHECK(back.params[1].second.data() == ckpt.params[1].second.data());
    CHECK(back.adam.step == 17);
    CHECK(back.adam.lr == 3e-4);
    CHECK(back.adam.m == ckpt.adam.m);
    CHECK(back.adam.v == ckpt.adam.v);
    std::remove(path.c_str());
}

TEST_CASE("corrupt checkpoints are rejected") {
    std::string path = "/tmp/flagforge_test_badckpt.bin";
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("garbage", f);
    std::fclose(f);
    CHECK_THROWS(load_checkpoint(path));
    std::remove(path.c_str());
}
