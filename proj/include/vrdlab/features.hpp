#pragma once

#include <cstdint>

#include "vrdlab/mhgat.hpp"
#include "vrdlab/proposals.hpp"

namespace vrd {

// Normalization extent for box coordinates; derived from the scene so
// features are resolution-independent.
struct FeatureFrame {
    double width = 1.0;
    double height = 1.0;
};

FeatureFrame scene_frame(const Scene& scene);

// Synthetic appearance features standing in for a CNN backbone: normalized
// box geometry, a hashed class-id embedding, and small seeded noise keyed by
// the detection's slot. Pure functions of their arguments.
Tensor toy_node_feature(const Detection& det, int slot, const FeatureFrame& frame, int dim,
                        std::uint64_t seed);

// Union feature of an ordered pair: union-box geometry, relative offsets and
// overlap between the two boxes, a hashed class-pair embedding, and noise.
// Self-pairs (slot_a == slot_b) yield the box's own geometry.
Tensor toy_edge_feature(const Detection& a, const Detection& b, int slot_a, int slot_b,
                        const FeatureFrame& frame, int dim, std::uint64_t seed);

// Features for the scene's kept detections: node vectors [N, d] and union
// features for every ordered pair [N, N, d].
struct RelationshipFeatures {
    std::vector<int> kept;  // detection index per graph slot
    SceneGraphFeatures graph;
};

RelationshipFeatures extract_toy_features(const Scene& scene, const ProposalSet& proposals,
                                          int dim, std::uint64_t seed);

}  // namespace vrd
