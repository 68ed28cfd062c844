#pragma once

#include <vector>

#include "vrdlab/geometry.hpp"

namespace vrd {

struct Detection {
    Box box;
    int class_id = 0;
    double score = 0.0;  // detector confidence in [0,1]
};

struct GtBox {
    Box box;
    int class_id = 0;
};

// Indices reference GroundTruth::boxes. object == kInvisibleObject marks a
// relationship whose object box is not annotated (human-object data only);
// fill_invisible_objects resolves those before any geometry runs.
struct Relationship {
    int subject = 0;
    int object = 0;
    int predicate = 0;
};

inline constexpr int kInvisibleObject = -1;

struct GroundTruth {
    std::vector<GtBox> boxes;
    std::vector<Relationship> relationships;
};

enum class SceneMode {
    General,  // any detection may be subject or object; self-pairs excluded
    Hoi,      // subjects restricted to the human class; self-pairs allowed
};

struct Scene {
    std::vector<Detection> detections;
    GroundTruth ground_truth;
    SceneMode mode = SceneMode::General;
    int human_class_id = -1;  // meaningful in Hoi mode only
};

}  // namespace vrd
