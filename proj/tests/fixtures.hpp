#pragma once

#include "vrdlab/data_io.hpp"
#include "vrdlab/proposals.hpp"

namespace vrd::testing {

// Hand-built scene exercising all six proposal classes.
//
// Ground truth: six disjoint 10x10 boxes g0..g5 on one row, relationships
// (g0,g1) and (g4,g5). Detections: b0 matches g0 exactly, b1 overlaps g1 at
// IoU 9/11, b2 and b3 match nothing, b4 matches g2 exactly, b5 overlaps g3
// at IoU 9/11, b6 overlaps g5 at IoU 9/11.
//
// Per-detection predicates: box-accurate {b0,b1,b4,b5,b6}, in-relationship
// {b0,b1,b6}. Tallies over all 42 ordered pairs (hand count):
//   POS 1, NEG1 2, NEG2 20, NEG3 2, NEG4 12, NEG5 5; d_pos 5, d_rel 2.
inline Scene six_class_scene() {
    Scene scene;
    scene.mode = SceneMode::General;
    for (int i = 0; i < 6; ++i) {
        const double x = 20.0 * i;
        scene.ground_truth.boxes.push_back(GtBox{Box{x, 0, x + 10, 10}, i + 1});
    }
    scene.ground_truth.relationships.push_back(Relationship{0, 1, 1});
    scene.ground_truth.relationships.push_back(Relationship{4, 5, 2});

    scene.detections = {
        Detection{Box{0, 0, 10, 10}, 1, 0.95},     // b0 -> g0
        Detection{Box{21, 0, 31, 10}, 2, 0.90},    // b1 -> g1
        Detection{Box{0, 50, 10, 60}, 3, 0.85},    // b2 -> nothing
        Detection{Box{20, 50, 30, 60}, 3, 0.80},   // b3 -> nothing
        Detection{Box{40, 0, 50, 10}, 3, 0.75},    // b4 -> g2
        Detection{Box{61, 0, 71, 10}, 4, 0.70},    // b5 -> g3
        Detection{Box{100, 1, 110, 11}, 6, 0.65},  // b6 -> g5
    };
    return scene;
}

// Small randomized scenes for property sweeps; alternates general and HOI
// mode with the seed.
inline std::vector<Scene> random_scenes(int count, std::uint64_t seed,
                                        bool hoi_mode = false) {
    SyntheticConfig config;
    config.scenes = count;
    config.objects_min = 6;
    config.objects_max = 12;
    config.relationships_min = 1;
    config.relationships_max = 3;
    config.jitter_sigma = 0.18;
    config.drop_prob = 0.15;
    config.spurious_rate = 0.45;
    config.num_classes = 7;
    config.num_predicates = 5;
    config.mode = hoi_mode ? SceneMode::Hoi : SceneMode::General;
    config.seed = seed;
    return generate_synthetic(config);
}

}  // namespace vrd::testing
