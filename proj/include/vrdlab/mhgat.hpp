#pragma once

#include <span>
#include <vector>

#include "vrdlab/nn.hpp"

namespace vrd {

// Fully connected scene graph over N nodes: per-node feature vectors plus one
// edge feature per ordered pair (i,j), self-edges included.
struct SceneGraphFeatures {
    Tensor nodes;  // [N, d]
    Tensor edges;  // [N, N, d_e]

    int count() const { return nodes.empty() ? 0 : nodes.dim(0); }
    int node_dim() const { return nodes.dim(1); }
    int edge_dim() const { return edges.dim(2); }

    Tensor node(int i) const;
    Tensor edge(int i, int j) const;
};

// One attention head: separate embeddings for the source node, target node
// and edge of a pair, plus the vector that reduces their concatenation to an
// attention logit.
struct AttentionHeadParams {
    LinearLayer source;  // [head_dim, d]
    LinearLayer target;  // [head_dim, d]
    LinearLayer edge;    // [head_dim, d_e]
    Tensor scoring;      // [3 * head_dim]
};

// Multi-head heterogeneous graph attention, one layer. The message MLP is
// shared across heads; per-head attention weights are averaged before the
// residual update
//   x'_i = x_i + (1/H) * sum_h sum_j alpha^h_ij * f_m([x_i, x_j, e_ij]).
struct MhgatParams {
    std::vector<AttentionHeadParams> heads;
    LinearLayer message_hidden;  // [m, 2d + d_e]
    LinearLayer message_out;     // [d, m]
    double leaky_slope = 0.2;

    static MhgatParams init(int dim, int edge_dim, int head_count, int head_dim,
                            int message_hidden_dim, CounterRng& rng);

    int head_count() const { return static_cast<int>(heads.size()); }
};

// Per-head attention matrices [H, N, N]; row (h, i, .) is a softmax over the
// attention logits of node i, so it is nonnegative and sums to 1.
Tensor attention(const MhgatParams& params, const SceneGraphFeatures& graph);

// Updated node features [N, d] after one attention layer.
Tensor message_pass(const MhgatParams& params, const SceneGraphFeatures& graph);

// Tape-recorded variant used for end-to-end gradients. Inputs are graph
// nodes holding the (already encoded) per-node and per-pair features.
struct BoundAttentionHead {
    BoundLinear source;
    BoundLinear target;
    BoundLinear edge;
    NodeId scoring = kNoNode;
};

struct BoundMhgat {
    std::vector<BoundAttentionHead> heads;
    BoundLinear message_hidden;
    BoundLinear message_out;
    double leaky_slope = 0.2;
};

BoundMhgat bind_mhgat(ParamBinder& binder, MhgatParams& params);

struct MhgatTape {
    std::vector<NodeId> outputs;                  // per node, [d]
    std::vector<std::vector<NodeId>> attention;   // [H][N], each a softmax row [N]
};

MhgatTape build_mhgat(Graph& g, const BoundMhgat& params,
                      std::span<const NodeId> node_features,
                      const std::vector<std::vector<NodeId>>& edge_features);

}  // namespace vrd
