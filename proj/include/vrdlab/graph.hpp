#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vrdlab/tensor.hpp"

namespace vrd {

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

// Reverse-mode tape. Nodes are appended in evaluation order, so walking the
// tape backwards visits a valid reverse topological order. Values are
// materialized eagerly at op creation; backward() fills gradients for every
// node reachable from the loss.
class Graph {
public:
    // leaf holding a value (parameters and constants alike)
    NodeId input(Tensor value);

    // y = W x + b with x [n], W [m,n], b [m]
    NodeId linear(NodeId x, NodeId weight, NodeId bias);
    NodeId add(NodeId a, NodeId b);
    NodeId sum(std::span<const NodeId> terms);    // elementwise, same shapes
    NodeId concat(std::span<const NodeId> parts); // 1-D parts
    NodeId relu(NodeId x);
    NodeId leaky_relu(NodeId x, double slope);
    NodeId sigmoid(NodeId x);
    NodeId softmax(NodeId x);                     // 1-D
    NodeId dot(NodeId a, NodeId b);               // -> [1]
    NodeId scale(NodeId x, double c);
    NodeId mul_scalar(NodeId s, NodeId x);        // s [1] times x elementwise
    NodeId stack(std::span<const NodeId> scalars);// k scalars -> [k]
    // y = sum_j coeffs[j] * vectors[j]; coeffs is a [k] node
    NodeId weighted_sum(NodeId coeffs, std::span<const NodeId> vectors);

    // mean binary cross entropy / focal term against constant targets -> [1]
    NodeId bce_mean(NodeId probabilities, Tensor targets);
    NodeId focal_mean(NodeId probabilities, Tensor targets01, double alpha, double gamma);

    const Tensor& value(NodeId id) const { return nodes_[static_cast<size_t>(id)].value; }
    const Tensor& grad(NodeId id) const;

    // Accumulates d(loss)/d(node) for every node; loss must be a scalar
    // recorded on this tape. Resets previous gradients.
    void backward(NodeId loss);

    size_t node_count() const { return nodes_.size(); }

private:
    enum class Op : std::uint8_t {
        Input, Linear, Add, Sum, Concat, Relu, LeakyRelu, Sigmoid, Softmax,
        Dot, Scale, MulScalar, Stack, WeightedSum, BceMean, FocalMean,
    };

    struct Node {
        Op op = Op::Input;
        Tensor value;
        Tensor grad;
        NodeId a = kNoNode;
        NodeId b = kNoNode;
        NodeId c = kNoNode;
        double p0 = 0.0;  // op parameter (slope, scale, alpha)
        double p1 = 0.0;  // op parameter (gamma)
        std::vector<NodeId> list;
        Tensor aux;  // constant payload (loss targets)
    };

    NodeId push(Node n);
    void backprop_node(NodeId id);
    Tensor& grad_ref(NodeId id);

    std::vector<Node> nodes_;
    bool has_gradients_ = false;
};

}  // namespace vrd
