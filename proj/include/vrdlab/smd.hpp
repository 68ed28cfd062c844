#pragma once

#include "vrdlab/geometry.hpp"
#include "vrdlab/nn.hpp"

namespace vrd {

// Binary spatial target for one (subject, object) pair, rasterized in the
// pooled frame of their union box. grid is [2, l_p, l_p]; channel 0 marks the
// subject cells, channel 1 the object cells.
struct MaskTarget {
    Tensor grid;

    int side() const { return grid.dim(1); }
    bool on(int channel, int row, int col) const { return grid.at(channel, row, col) > 0.5; }
};

// Maps each box affinely into the union box scaled to [0, l_p]^2 and marks
// the cells whose centers fall inside (low edges inclusive, high edges
// exclusive). A sliver box that covers no cell center still gets the cell
// under its own center, so each channel always has at least one active cell.
MaskTarget mask_target(const Box& subject, const Box& object, int pooled_side);

// Two-layer perceptron from the relationship feature vector to 2*l_p^2 mask
// logits.
struct SmdHead {
    LinearLayer hidden;
    LinearLayer out;
    int mask_size = 0;

    static SmdHead init(int feature_dim, int hidden_dim, int pooled_side, CounterRng& rng);
};

// Sigmoid mask probabilities [2, l_p, l_p].
Tensor predict_mask(const SmdHead& head, const Tensor& feature);

// Mean binary cross entropy over all mask cells.
double mask_loss(const Tensor& predicted, const MaskTarget& target);

struct BoundSmdHead {
    BoundLinear hidden;
    BoundLinear out;
};

BoundSmdHead bind_smd(ParamBinder& binder, SmdHead& head);

// Tape route; returns the flat [2*l_p^2] probability node.
NodeId build_smd(Graph& g, const BoundSmdHead& head, NodeId feature);

}  // namespace vrd
