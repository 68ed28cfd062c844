#include "vrdlab/smd.hpp"

#include <algorithm>
#include <stdexcept>

namespace vrd {

namespace {

// box mapped into the union frame scaled to [0, side]^2
struct MappedBox {
    double x1, y1, x2, y2;
};

MappedBox map_into(const Box& b, const Box& frame, int side) {
    const double sx = static_cast<double>(side) / frame.width();
    const double sy = static_cast<double>(side) / frame.height();
    return MappedBox{(b.x1 - frame.x1) * sx, (b.y1 - frame.y1) * sy,
                     (b.x2 - frame.x1) * sx, (b.y2 - frame.y1) * sy};
}

void rasterize(Tensor& grid, int channel, const MappedBox& m, int side) {
    bool any = false;
    for (int r = 0; r < side; ++r) {
        const double cy = static_cast<double>(r) + 0.5;
        for (int c = 0; c < side; ++c) {
            const double cx = static_cast<double>(c) + 0.5;
            if (cx >= m.x1 && cx < m.x2 && cy >= m.y1 && cy < m.y2) {
                grid.at(channel, r, c) = 1.0;
                any = true;
            }
        }
    }
    if (!any) {
        // box thinner than a cell: mark the cell under its center
        const int c = std::clamp(static_cast<int>(0.5 * (m.x1 + m.x2)), 0, side - 1);
        const int r = std::clamp(static_cast<int>(0.5 * (m.y1 + m.y2)), 0, side - 1);
        grid.at(channel, r, c) = 1.0;
    }
}

}  // namespace

MaskTarget mask_target(const Box& subject, const Box& object, int pooled_side) {
    if (pooled_side < 1) throw std::invalid_argument("mask_target: pooled side must be >= 1");
    if (!subject.valid() || !object.valid()) {
        throw std::invalid_argument("mask_target: degenerate box");
    }
    const Box frame = union_box(subject, object);

    MaskTarget target;
    target.grid = Tensor({2, pooled_side, pooled_side});
    rasterize(target.grid, 0, map_into(subject, frame, pooled_side), pooled_side);
    rasterize(target.grid, 1, map_into(object, frame, pooled_side), pooled_side);
    return target;
}

SmdHead SmdHead::init(int feature_dim, int hidden_dim, int pooled_side, CounterRng& rng) {
    SmdHead head;
    head.hidden = LinearLayer::init(hidden_dim, feature_dim, rng);
    head.out = LinearLayer::init(2 * pooled_side * pooled_side, hidden_dim, rng);
    head.mask_size = pooled_side;
    return head;
}

Tensor predict_mask(const SmdHead& head, const Tensor& feature) {
    if (feature.ndim() != 1 || feature.dim(0) != head.hidden.in_dim()) {
        throw std::invalid_argument("predict_mask: feature dim " + feature.shape_string() +
                                    " does not match head");
    }
    const Tensor flat = sigmoid(head.out.apply(relu(head.hidden.apply(feature))));
    return Tensor({2, head.mask_size, head.mask_size},
                  std::vector<double>(flat.data(), flat.data() + flat.size()));
}

double mask_loss(const Tensor& predicted, const MaskTarget& target) {
    return bce_loss(predicted, target.grid);
}

BoundSmdHead bind_smd(ParamBinder& binder, SmdHead& head) {
    BoundSmdHead b;
    b.hidden = binder.linear(head.hidden);
    b.out = binder.linear(head.out);
    return b;
}

NodeId build_smd(Graph& g, const BoundSmdHead& head, NodeId feature) {
    const NodeId hidden = g.relu(g.linear(feature, head.hidden.weight, head.hidden.bias));
    return g.sigmoid(g.linear(hidden, head.out.weight, head.out.bias));
}

}  // namespace vrd
