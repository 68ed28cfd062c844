#include "vrdlab/mhgat.hpp"

#include <stdexcept>

namespace vrd {

Tensor SceneGraphFeatures::node(int i) const {
    const int d = node_dim();
    Tensor out({d});
    for (int k = 0; k < d; ++k) out[k] = nodes.at(i, k);
    return out;
}

Tensor SceneGraphFeatures::edge(int i, int j) const {
    const int d = edge_dim();
    Tensor out({d});
    for (int k = 0; k < d; ++k) out[k] = edges.at(i, j, k);
    return out;
}

MhgatParams MhgatParams::init(int dim, int edge_dim, int head_count, int head_dim,
                              int message_hidden_dim, CounterRng& rng) {
    if (head_count < 1 || head_dim < 1) {
        throw std::invalid_argument("MhgatParams::init: head_count and head_dim must be >= 1");
    }
    MhgatParams p;
    for (int h = 0; h < head_count; ++h) {
        AttentionHeadParams head;
        head.source = LinearLayer::init(head_dim, dim, rng);
        head.target = LinearLayer::init(head_dim, dim, rng);
        head.edge = LinearLayer::init(head_dim, edge_dim, rng);
        head.scoring = Tensor({3 * head_dim});
        const double bound = std::sqrt(6.0 / static_cast<double>(3 * head_dim + 1));
        for (int i = 0; i < head.scoring.size(); ++i) head.scoring[i] = rng.uniform(-bound, bound);
        p.heads.push_back(std::move(head));
    }
    p.message_hidden = LinearLayer::init(message_hidden_dim, 2 * dim + edge_dim, rng);
    p.message_out = LinearLayer::init(dim, message_hidden_dim, rng);
    return p;
}

namespace {

void validate(const MhgatParams& params, const SceneGraphFeatures& graph) {
    if (graph.count() < 1) throw std::invalid_argument("mhgat: empty graph");
    if (params.heads.empty()) throw std::invalid_argument("mhgat: no attention heads");
    if (params.message_out.out_dim() != graph.node_dim()) {
        throw std::invalid_argument("mhgat: message output dim must equal node dim");
    }
}

}  // namespace

Tensor attention(const MhgatParams& params, const SceneGraphFeatures& graph) {
    validate(params, graph);
    const int n = graph.count();
    const int h_count = params.head_count();
    Tensor alpha({h_count, n, n});

    for (int h = 0; h < h_count; ++h) {
        const AttentionHeadParams& head = params.heads[h];
        std::vector<Tensor> src(static_cast<size_t>(n)), tgt(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            const Tensor x = graph.node(i);
            src[static_cast<size_t>(i)] = head.source.apply(x);
            tgt[static_cast<size_t>(i)] = head.target.apply(x);
        }
        for (int i = 0; i < n; ++i) {
            Tensor logits({n});
            for (int j = 0; j < n; ++j) {
                const Tensor parts[] = {src[static_cast<size_t>(i)], tgt[static_cast<size_t>(j)],
                                        head.edge.apply(graph.edge(i, j))};
                logits[j] = dot(head.scoring, concat(parts));
            }
            const Tensor row = softmax(leaky_relu(logits, params.leaky_slope));
            for (int j = 0; j < n; ++j) alpha.at(h, i, j) = row[j];
        }
    }
    return alpha;
}

Tensor message_pass(const MhgatParams& params, const SceneGraphFeatures& graph) {
    validate(params, graph);
    const int n = graph.count();
    const int d = graph.node_dim();
    const Tensor alpha = attention(params, graph);
    const double head_scale = 1.0 / static_cast<double>(params.head_count());

    Tensor out({n, d});
    for (int i = 0; i < n; ++i) {
        const Tensor xi = graph.node(i);
        Tensor acc({d});
        for (int j = 0; j < n; ++j) {
            const Tensor parts[] = {xi, graph.node(j), graph.edge(i, j)};
            const Tensor message =
                params.message_out.apply(relu(params.message_hidden.apply(concat(parts))));
            double coeff = 0.0;
            for (int h = 0; h < params.head_count(); ++h) coeff += alpha.at(h, i, j);
            coeff *= head_scale;
            for (int k = 0; k < d; ++k) acc[k] += coeff * message[k];
        }
        for (int k = 0; k < d; ++k) out.at(i, k) = xi[k] + acc[k];
    }
    return out;
}

BoundMhgat bind_mhgat(ParamBinder& binder, MhgatParams& params) {
    BoundMhgat b;
    for (AttentionHeadParams& head : params.heads) {
        BoundAttentionHead bh;
        bh.source = binder.linear(head.source);
        bh.target = binder.linear(head.target);
        bh.edge = binder.linear(head.edge);
        bh.scoring = binder.tensor(head.scoring);
        b.heads.push_back(bh);
    }
    b.message_hidden = binder.linear(params.message_hidden);
    b.message_out = binder.linear(params.message_out);
    b.leaky_slope = params.leaky_slope;
    return b;
}

MhgatTape build_mhgat(Graph& g, const BoundMhgat& params,
                      std::span<const NodeId> node_features,
                      const std::vector<std::vector<NodeId>>& edge_features) {
    const int n = static_cast<int>(node_features.size());
    if (n < 1) throw std::invalid_argument("build_mhgat: empty graph");
    const int h_count = static_cast<int>(params.heads.size());

    // shared messages m_ij = f_m([x_i, x_j, e_ij])
    std::vector<std::vector<NodeId>> messages(static_cast<size_t>(n),
                                              std::vector<NodeId>(static_cast<size_t>(n)));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const NodeId parts[] = {node_features[static_cast<size_t>(i)],
                                    node_features[static_cast<size_t>(j)],
                                    edge_features[static_cast<size_t>(i)][static_cast<size_t>(j)]};
            const NodeId hidden = g.relu(g.linear(g.concat(parts), params.message_hidden.weight,
                                                  params.message_hidden.bias));
            messages[static_cast<size_t>(i)][static_cast<size_t>(j)] =
                g.linear(hidden, params.message_out.weight, params.message_out.bias);
        }
    }

    MhgatTape tape;
    tape.attention.assign(static_cast<size_t>(h_count), {});

    // per-head attention rows
    std::vector<std::vector<NodeId>> head_rows(static_cast<size_t>(h_count));
    for (int h = 0; h < h_count; ++h) {
        const BoundAttentionHead& head = params.heads[h];
        std::vector<NodeId> src(static_cast<size_t>(n)), tgt(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            src[static_cast<size_t>(i)] = g.linear(node_features[static_cast<size_t>(i)],
                                                   head.source.weight, head.source.bias);
            tgt[static_cast<size_t>(i)] = g.linear(node_features[static_cast<size_t>(i)],
                                                   head.target.weight, head.target.bias);
        }
        for (int i = 0; i < n; ++i) {
            std::vector<NodeId> scores;
            scores.reserve(static_cast<size_t>(n));
            for (int j = 0; j < n; ++j) {
                const NodeId e = g.linear(
                    edge_features[static_cast<size_t>(i)][static_cast<size_t>(j)],
                    head.edge.weight, head.edge.bias);
                const NodeId parts[] = {src[static_cast<size_t>(i)], tgt[static_cast<size_t>(j)], e};
                scores.push_back(g.dot(head.scoring, g.concat(parts)));
            }
            const NodeId row = g.softmax(g.leaky_relu(g.stack(scores), params.leaky_slope));
            tape.attention[static_cast<size_t>(h)].push_back(row);
            head_rows[static_cast<size_t>(h)].push_back(row);
        }
    }

    // combine heads, apply residual
    const double head_scale = 1.0 / static_cast<double>(h_count);
    for (int i = 0; i < n; ++i) {
        NodeId coeffs;
        if (h_count == 1) {
            coeffs = g.scale(head_rows[0][static_cast<size_t>(i)], head_scale);
        } else {
            std::vector<NodeId> rows;
            for (int h = 0; h < h_count; ++h) rows.push_back(head_rows[static_cast<size_t>(h)][static_cast<size_t>(i)]);
            coeffs = g.scale(g.sum(rows), head_scale);
        }
        const NodeId aggregated = g.weighted_sum(coeffs, messages[static_cast<size_t>(i)]);
        tape.outputs.push_back(g.add(node_features[static_cast<size_t>(i)], aggregated));
    }
    return tape;
}

}  // namespace vrd
