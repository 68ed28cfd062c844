#include <doctest.h>

#include <cmath>
#include <numeric>

#include "vrdlab/mhgat.hpp"

using namespace vrd;

namespace {

SceneGraphFeatures random_graph(int n, int dim, int edge_dim, CounterRng& rng) {
    SceneGraphFeatures g;
    g.nodes = Tensor({n, dim});
    g.edges = Tensor({n, n, edge_dim});
    for (int i = 0; i < g.nodes.size(); ++i) g.nodes[i] = rng.normal();
    for (int i = 0; i < g.edges.size(); ++i) g.edges[i] = rng.normal();
    return g;
}

void zero_messages(MhgatParams& p) {
    p.message_hidden.weight.fill(0.0);
    p.message_hidden.bias.fill(0.0);
    p.message_out.weight.fill(0.0);
    p.message_out.bias.fill(0.0);
}

SceneGraphFeatures permuted(const SceneGraphFeatures& g, const std::vector<int>& perm) {
    SceneGraphFeatures out;
    const int n = g.count();
    out.nodes = Tensor({n, g.node_dim()});
    out.edges = Tensor({n, n, g.edge_dim()});
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < g.node_dim(); ++k) out.nodes.at(i, k) = g.nodes.at(perm[i], k);
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < g.edge_dim(); ++k) {
                out.edges.at(i, j, k) = g.edges.at(perm[i], perm[j], k);
            }
        }
    }
    return out;
}

}  // namespace

TEST_CASE("attention of a single node is 1") {
    CounterRng rng(3);
    const MhgatParams params = MhgatParams::init(4, 4, 3, 2, 4, rng);
    const SceneGraphFeatures g = random_graph(1, 4, 4, rng);
    const Tensor alpha = attention(params, g);
    for (int h = 0; h < 3; ++h) CHECK(alpha.at(h, 0, 0) == doctest::Approx(1.0));
}

TEST_CASE("identical nodes with a zero scoring vector attend uniformly") {
    CounterRng rng(4);
    MhgatParams params = MhgatParams::init(3, 3, 2, 2, 3, rng);
    for (AttentionHeadParams& h : params.heads) h.scoring.fill(0.0);

    SceneGraphFeatures g = random_graph(2, 3, 3, rng);
    for (int k = 0; k < 3; ++k) g.nodes.at(1, k) = g.nodes.at(0, k);

    const Tensor alpha = attention(params, g);
    for (int h = 0; h < 2; ++h) {
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) CHECK(alpha.at(h, i, j) == doctest::Approx(0.5));
        }
    }
}

TEST_CASE("attention rows are stochastic") {
    CounterRng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(5));
        const MhgatParams params = MhgatParams::init(5, 5, 4, 3, 6, rng);
        const SceneGraphFeatures g = random_graph(n, 5, 5, rng);
        const Tensor alpha = attention(params, g);
        for (int h = 0; h < 4; ++h) {
            for (int i = 0; i < n; ++i) {
                double row = 0.0;
                for (int j = 0; j < n; ++j) {
                    CHECK(alpha.at(h, i, j) >= 0.0);
                    row += alpha.at(h, i, j);
                }
                CHECK(std::abs(row - 1.0) < 1e-9);
            }
        }
    }
}

TEST_CASE("zero message parameters give the residual identity bit-for-bit") {
    CounterRng rng(6);
    MhgatParams params = MhgatParams::init(6, 6, 4, 2, 5, rng);
    zero_messages(params);
    const SceneGraphFeatures g = random_graph(5, 6, 6, rng);
    const Tensor out = message_pass(params, g);
    for (int i = 0; i < out.size(); ++i) CHECK(out[i] == g.nodes[i]);
}

TEST_CASE("single node with constant message shifts by the bias") {
    CounterRng rng(7);
    MhgatParams params = MhgatParams::init(3, 3, 2, 2, 4, rng);
    zero_messages(params);
    params.message_out.bias = Tensor::vector({0.5, -1.0, 2.0});
    const SceneGraphFeatures g = random_graph(1, 3, 3, rng);
    const Tensor out = message_pass(params, g);
    CHECK(out.at(0, 0) == doctest::Approx(g.nodes.at(0, 0) + 0.5));
    CHECK(out.at(0, 1) == doctest::Approx(g.nodes.at(0, 1) - 1.0));
    CHECK(out.at(0, 2) == doctest::Approx(g.nodes.at(0, 2) + 2.0));
}

TEST_CASE("message passing is permutation equivariant") {
    CounterRng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 4 + static_cast<int>(rng.below(5));
        const MhgatParams params = MhgatParams::init(4, 4, 2, 3, 5, rng);
        const SceneGraphFeatures g = random_graph(n, 4, 4, rng);

        std::vector<int> perm(static_cast<size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = n - 1; i > 0; --i) {
            std::swap(perm[static_cast<size_t>(i)],
                      perm[static_cast<size_t>(rng.below(static_cast<std::uint64_t>(i + 1)))]);
        }

        const Tensor direct = message_pass(params, permuted(g, perm));
        const Tensor reference = message_pass(params, g);
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < 4; ++k) {
                CHECK(direct.at(i, k) ==
                      doctest::Approx(reference.at(perm[static_cast<size_t>(i)], k)).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("distinct source and target embeddings break attention symmetry") {
    // d = 1, one head; f_s doubles, f_t passes through, edges contribute 0
    MhgatParams params;
    AttentionHeadParams head;
    head.source = LinearLayer::zeros(1, 1);
    head.source.weight.at(0, 0) = 2.0;
    head.target = LinearLayer::zeros(1, 1);
    head.target.weight.at(0, 0) = 1.0;
    head.edge = LinearLayer::zeros(1, 1);
    head.scoring = Tensor::vector({1.0, 1.0, 1.0});
    params.heads.push_back(head);
    params.message_hidden = LinearLayer::zeros(2, 3);
    params.message_out = LinearLayer::zeros(1, 2);

    SceneGraphFeatures g;
    g.nodes = Tensor({2, 1}, {1.0, 2.0});
    g.edges = Tensor({2, 2, 1});

    const Tensor alpha = attention(params, g);
    // logits row 0: (2*1+1, 2*1+2) -> alpha_01 = e^4/(e^3+e^4)
    CHECK(alpha.at(0, 0, 1) == doctest::Approx(std::exp(4.0) / (std::exp(3.0) + std::exp(4.0))));
    // logits row 1: (2*2+1, 2*2+2) -> alpha_10 = e^5/(e^5+e^6)
    CHECK(alpha.at(0, 1, 0) == doctest::Approx(std::exp(5.0) / (std::exp(5.0) + std::exp(6.0))));
    CHECK(alpha.at(0, 0, 1) != doctest::Approx(alpha.at(0, 1, 0)));
}

TEST_CASE("tape route reproduces the eager layer and passes gradient checks") {
    CounterRng rng(9);
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(3));
        const int dim = 3;
        MhgatParams params = MhgatParams::init(dim, dim, 2, 2, 4, rng);
        const SceneGraphFeatures graph = random_graph(n, dim, dim, rng);

        auto build = [&](Graph& g, ParamBinder& binder) {
            const BoundMhgat bound = bind_mhgat(binder, params);
            std::vector<NodeId> nodes;
            std::vector<std::vector<NodeId>> edges(static_cast<size_t>(n),
                                                   std::vector<NodeId>(static_cast<size_t>(n)));
            for (int i = 0; i < n; ++i) nodes.push_back(g.input(graph.node(i)));
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    edges[static_cast<size_t>(i)][static_cast<size_t>(j)] =
                        g.input(graph.edge(i, j));
                }
            }
            return build_mhgat(g, bound, nodes, edges);
        };

        // values agree with the eager route
        Graph g;
        ParamBinder binder(g);
        const MhgatTape tape = build(g, binder);
        const Tensor eager_out = message_pass(params, graph);
        const Tensor eager_alpha = attention(params, graph);
        for (int i = 0; i < n; ++i) {
            const Tensor& row = g.value(tape.outputs[static_cast<size_t>(i)]);
            for (int k = 0; k < dim; ++k) {
                CHECK(row[k] == doctest::Approx(eager_out.at(i, k)).epsilon(1e-12));
            }
            for (int h = 0; h < 2; ++h) {
                const Tensor& arow = g.value(tape.attention[static_cast<size_t>(h)][static_cast<size_t>(i)]);
                for (int j = 0; j < n; ++j) {
                    CHECK(arow[j] == doctest::Approx(eager_alpha.at(h, i, j)).epsilon(1e-12));
                }
            }
        }

        // gradients through attention and messages
        const NodeId loss = g.bce_mean(g.sigmoid(tape.outputs[0]), Tensor({dim}, 1.0));
        g.backward(loss);
        std::vector<Tensor> analytic;
        std::vector<Tensor*> param_ptrs;
        for (size_t k = 0; k < binder.count(); ++k) {
            analytic.push_back(binder.gradient(k));
            param_ptrs.push_back(binder.parameter(k));
        }
        auto loss_value = [&]() {
            Graph h;
            ParamBinder pb(h);
            const MhgatTape t = build(h, pb);
            return h.value(h.bce_mean(h.sigmoid(t.outputs[0]), Tensor({dim}, 1.0))).item();
        };
        const GradientCheckReport report = check_gradients(param_ptrs, analytic, loss_value);
        INFO("worst rel err ", report.worst_relative_error);
        CHECK(report.passed);
    }
}
