#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "vrdlab/graph.hpp"
#include "vrdlab/nn.hpp"
#include "vrdlab/rng.hpp"

using namespace vrd;

namespace {

Tensor random_tensor(std::vector<int> shape, CounterRng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (int i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
    return t;
}

}  // namespace

TEST_CASE("eager primitives") {
    SUBCASE("softmax of a constant vector is uniform") {
        const Tensor y = softmax(Tensor::vector({0.0, 0.0}));
        CHECK(y[0] == doctest::Approx(0.5));
        CHECK(y[1] == doctest::Approx(0.5));
    }
    SUBCASE("sigmoid at zero") { CHECK(sigmoid(Tensor::scalar(0.0)).item() == doctest::Approx(0.5)); }
    SUBCASE("identity matmul") {
        Tensor eye({3, 3});
        for (int i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
        const Tensor v = Tensor::vector({1.0, -2.0, 3.0});
        const Tensor y = matmul(eye, v);
        for (int i = 0; i < 3; ++i) CHECK(y[i] == v[i]);
    }
    SUBCASE("softmax sums to one and stays nonnegative") {
        CounterRng rng(5);
        for (int t = 0; t < 100; ++t) {
            const Tensor y = softmax(random_tensor({1 + static_cast<int>(rng.below(8))}, rng, 30.0));
            double sum = 0.0;
            for (int i = 0; i < y.size(); ++i) {
                CHECK(y[i] >= 0.0);
                sum += y[i];
            }
            CHECK(std::abs(sum - 1.0) < 1e-9);
        }
    }
    SUBCASE("shape mismatch is a typed failure") {
        CHECK_THROWS_AS(matmul(Tensor({2, 3}), Tensor({2})), std::invalid_argument);
        CHECK_THROWS_AS(add(Tensor({2}), Tensor({3})), std::invalid_argument);
    }
}

TEST_CASE("bce loss") {
    SUBCASE("matching prediction sits at the clamp floor") {
        const Tensor y = Tensor::vector({1.0, 0.0});
        CHECK(bce_loss(y, y) == doctest::Approx(-std::log(1.0 - kProbClamp)));
    }
    SUBCASE("uncertain prediction of a positive costs ln 2") {
        CHECK(bce_loss(Tensor::scalar(0.5), Tensor::scalar(1.0)) ==
              doctest::Approx(std::log(2.0)));
    }
    SUBCASE("random case matches the scalar-by-scalar evaluation") {
        CounterRng rng(17);
        Tensor p({13});
        Tensor y({13});
        for (int i = 0; i < 13; ++i) {
            p[i] = rng.uniform(0.01, 0.99);
            y[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
        }
        double expected = 0.0;
        for (int i = 0; i < 13; ++i) {
            expected += y[i] > 0.5 ? -std::log(p[i]) : -std::log(1.0 - p[i]);
        }
        expected /= 13.0;
        CHECK(bce_loss(p, y) == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("loss is nonnegative") {
        CounterRng rng(18);
        for (int t = 0; t < 50; ++t) {
            Tensor p({4});
            Tensor y({4});
            for (int i = 0; i < 4; ++i) {
                p[i] = rng.uniform();
                y[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
            }
            CHECK(bce_loss(p, y) >= 0.0);
        }
    }
}

TEST_CASE("focal loss") {
    SUBCASE("gamma 0, alpha 1 reduces to cross-entropy") {
        CHECK(focal_loss(0.3, 1, 1.0, 0.0) == doctest::Approx(-std::log(0.3)));
        CHECK(focal_loss(0.3, -1, 1.0, 0.0) == doctest::Approx(-std::log(0.7)));
    }
    SUBCASE("canonical settings at p = 0.5") {
        // 0.25 * (0.5)^2 * ln 2
        CHECK(focal_loss(0.5, 1, 0.25, 2.0) == doctest::Approx(0.25 * 0.25 * std::log(2.0)));
        CHECK(focal_loss(0.5, 1, 0.25, 2.0) == doctest::Approx(0.04332169878499658));
    }
    SUBCASE("confident correct prediction vanishes") {
        CHECK(focal_loss(1.0 - 1e-9, 1, 0.25, 2.0) < 1e-12);
    }
}

TEST_CASE("tape matches eager forward values") {
    CounterRng rng(23);
    Graph g;
    const Tensor xv = random_tensor({4}, rng);
    const Tensor wv = random_tensor({3, 4}, rng);
    const Tensor bv = random_tensor({3}, rng);
    const NodeId y = g.sigmoid(g.linear(g.input(xv), g.input(wv), g.input(bv)));
    const Tensor expected = sigmoid(add(matmul(wv, xv), bv));
    for (int i = 0; i < 3; ++i) CHECK(g.value(y)[i] == expected[i]);
}

TEST_CASE("analytic derivative spot checks") {
    SUBCASE("sigmoid slope at zero is a quarter") {
        Graph g;
        const NodeId x = g.input(Tensor::scalar(0.0));
        const NodeId y = g.sigmoid(x);
        g.backward(y);
        CHECK(g.grad(x)[0] == doctest::Approx(0.25));
    }
    SUBCASE("reading gradients before backward is a contract violation") {
        Graph g;
        const NodeId x = g.input(Tensor::scalar(1.0));
        CHECK_THROWS_AS(g.grad(x), std::logic_error);
    }
    SUBCASE("bce gradient vanishes at the optimum") {
        Graph g;
        const NodeId p = g.input(Tensor::vector({0.9999999, 0.0000001}));
        const NodeId loss = g.bce_mean(p, Tensor::vector({1.0, 0.0}));
        g.backward(loss);
        CHECK(std::abs(g.grad(p)[0]) < 1e-4);
    }
}

TEST_CASE("finite differences validate every tape op") {
    CounterRng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 3 + static_cast<int>(rng.below(3));
        Tensor w1 = random_tensor({n, n}, rng, 0.5);
        Tensor b1 = random_tensor({n}, rng, 0.2);
        Tensor w2 = random_tensor({2, 2 * n + 1}, rng, 0.5);
        Tensor b2 = random_tensor({2}, rng, 0.2);
        Tensor score = random_tensor({n}, rng, 0.5);
        const Tensor x0 = random_tensor({n}, rng);
        const Tensor x1 = random_tensor({n}, rng);
        const Tensor targets = Tensor::vector({1.0, 0.0});

        std::vector<Tensor*> params = {&w1, &b1, &w2, &b2, &score};

        // a net that touches every op on the tape
        auto build = [&](Graph& g, ParamBinder& binder) {
            const NodeId w1n = binder.tensor(w1);
            const NodeId b1n = binder.tensor(b1);
            const NodeId w2n = binder.tensor(w2);
            const NodeId b2n = binder.tensor(b2);
            const NodeId sn = binder.tensor(score);

            const NodeId a = g.input(x0);
            const NodeId b = g.input(x1);
            const NodeId ha = g.leaky_relu(g.linear(a, w1n, b1n), 0.2);
            const NodeId hb = g.relu(g.linear(b, w1n, b1n));
            const NodeId sm = g.softmax(ha);
            const NodeId d = g.dot(sn, hb);                         // [1]
            const NodeId mixed = g.mul_scalar(d, g.add(sm, hb));    // [n]
            const NodeId both[] = {mixed, g.scale(sm, 1.7)};
            const NodeId stacked_parts[] = {d, g.dot(sn, sm)};
            const NodeId coeffs = g.stack(stacked_parts);           // [2]
            const NodeId ws_parts[] = {g.sum(both), mixed};
            const NodeId ws = g.weighted_sum(coeffs, ws_parts);     // [n]
            const NodeId cat_parts[] = {ws, sm, d};
            const NodeId z = g.concat(cat_parts);                   // [2n+1]
            const NodeId probs = g.sigmoid(g.linear(z, w2n, b2n));  // [2]
            const NodeId bce = g.bce_mean(probs, targets);
            const NodeId focal = g.focal_mean(probs, targets, 0.25, 2.0);
            return g.add(bce, focal);
        };

        Graph g;
        ParamBinder binder(g);
        const NodeId loss = build(g, binder);
        g.backward(loss);

        std::vector<Tensor> analytic;
        for (size_t k = 0; k < binder.count(); ++k) analytic.push_back(binder.gradient(k));

        auto loss_value = [&]() {
            Graph h;
            ParamBinder pb(h);
            return h.value(build(h, pb)).item();
        };

        const GradientCheckReport report = check_gradients(params, analytic, loss_value);
        INFO("trial ", trial, " worst rel err ", report.worst_relative_error);
        CHECK(report.passed);
    }
}

TEST_CASE("optimizer step") {
    SUBCASE("zero gradient leaves parameters unchanged") {
        Tensor w = Tensor::vector({1.0, -2.0});
        std::vector<Tensor*> params = {&w};
        OptimizerState opt;
        opt.learning_rate = 0.1;
        opt.momentum = 0.0;
        opt.attach(params);
        const std::vector<Tensor> grads = {Tensor({2})};
        optimizer_step(params, grads, opt);
        CHECK(w[0] == 1.0);
        CHECK(w[1] == -2.0);
    }
    SUBCASE("one step on the quadratic bowl") {
        Tensor w = Tensor::scalar(1.0);
        std::vector<Tensor*> params = {&w};
        OptimizerState opt;
        opt.learning_rate = 0.1;
        opt.momentum = 0.0;
        opt.attach(params);
        const std::vector<Tensor> grads = {Tensor::scalar(2.0 * w.item())};
        optimizer_step(params, grads, opt);
        CHECK(w.item() == doctest::Approx(0.8));
    }
    SUBCASE("a hundred steps converge geometrically") {
        Tensor w = Tensor::scalar(1.0);
        std::vector<Tensor*> params = {&w};
        OptimizerState opt;
        opt.learning_rate = 0.1;
        opt.momentum = 0.0;
        opt.attach(params);
        for (int i = 0; i < 100; ++i) {
            const std::vector<Tensor> grads = {Tensor::scalar(2.0 * w.item())};
            optimizer_step(params, grads, opt);
        }
        CHECK(std::abs(w.item()) < 1e-4);
    }
    SUBCASE("non-finite gradient aborts the step") {
        Tensor w = Tensor::scalar(1.0);
        std::vector<Tensor*> params = {&w};
        OptimizerState opt;
        opt.attach(params);
        const std::vector<Tensor> grads = {
            Tensor::scalar(std::numeric_limits<double>::quiet_NaN())};
        CHECK_THROWS_AS(optimizer_step(params, grads, opt), std::runtime_error);
        CHECK(w.item() == 1.0);
    }
}

TEST_CASE("checkpoint round-trip") {
    CounterRng rng(77);
    Checkpoint ckpt;
    ckpt.metadata["feature_dim"] = "8";
    ckpt.metadata["note"] = "round trip";
    ckpt.tensors.emplace_back("layer.weight", random_tensor({3, 4}, rng));
    ckpt.tensors.emplace_back("layer.bias", random_tensor({3}, rng));

    const std::string path = "checkpoint_roundtrip.bin";
    save_checkpoint(path, ckpt);
    const Checkpoint loaded = load_checkpoint(path);

    CHECK(loaded.metadata == ckpt.metadata);
    REQUIRE(loaded.tensors.size() == 2);
    for (size_t i = 0; i < 2; ++i) {
        CHECK(loaded.tensors[i].first == ckpt.tensors[i].first);
        CHECK(loaded.tensors[i].second.shape() == ckpt.tensors[i].second.shape());
        for (int k = 0; k < loaded.tensors[i].second.size(); ++k) {
            CHECK(loaded.tensors[i].second[k] == ckpt.tensors[i].second[k]);
        }
    }
    CHECK_THROWS_AS(load_checkpoint("missing_checkpoint.bin"), std::runtime_error);
    std::remove(path.c_str());
}
