#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "vrdlab/pipeline.hpp"
#include "vrdlab/proposals.hpp"

namespace vrd {

// Raised for malformed input files; the CLI maps it to the data-error exit
// code. Messages name the offending image/record.
class AnnotationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AnnotationData {
    SceneMode mode = SceneMode::General;
    int human_class_id = -1;
    std::vector<Scene> scenes;
    nlohmann::json config;  // provenance of the generating run, echoed on save
};

// Versioned JSON container: images -> {gt_boxes, gt_relationships,
// detections}. Loading validates boxes, scores, and index ranges with
// record-level diagnostics. Relationships may reference an invisible object
// (index -1) in HOI mode only.
void save_annotations(const std::string& path, const AnnotationData& data);
AnnotationData load_annotations(const std::string& path);

// Duplicate-instance cleanup: same-class boxes connect when IoU >= threshold,
// connected components merge into their coordinate mean, and relationship
// indices follow the remap.
struct MergeResult {
    std::vector<GtBox> boxes;
    std::vector<int> index_map;  // old index -> merged index
};

MergeResult merge_boxes(const std::vector<GtBox>& boxes,
                        double iou_threshold = kDefaultIouThreshold);
GroundTruth merge_ground_truth(const GroundTruth& gt,
                               double iou_threshold = kDefaultIouThreshold);

// Replaces each invisible-object relationship (object index -1) by the
// self-pair (subject, subject, predicate). Triplet count is preserved.
GroundTruth fill_invisible_objects(GroundTruth gt);

struct SyntheticConfig {
    int scenes = 100;
    int objects_min = 18;
    int objects_max = 28;
    int relationships_min = 2;
    int relationships_max = 4;
    double jitter_sigma = 0.22;    // corner noise as a fraction of box size
    double drop_prob = 0.05;       // chance a ground-truth box has no detection
    double spurious_rate = 0.70;   // expected fraction of detections that are spurious
    int top_k = 100;               // detections kept; {20,30,40,50,100} are the usual sweep points
    int num_classes = 12;
    int num_predicates = 8;
    SceneMode mode = SceneMode::General;
    int human_class_id = 0;
    double width = 1000.0;
    double height = 1000.0;
    std::uint64_t seed = 0;
};

// Detector stand-in. Ground-truth boxes are placed without mutual
// containment; relationships link hub subjects to their nearest boxes with a
// class-determined predicate; detections are jittered copies of the ground
// truth (scores correlated with localization quality, some dropped) plus
// lower-scored spurious boxes. Pure function of the config.
std::vector<Scene> generate_synthetic(const SyntheticConfig& config);

// The predicate the generator assigns to a (subject class, object class)
// pair; exposed so learned predictions can be checked against the rule.
int synthetic_predicate(int subject_class, int object_class, int num_predicates);

struct StatsReport {
    ClassDistribution aggregate;
    std::vector<ClassDistribution> per_scene;
    double pos_fraction = 0.0;   // |S_pos| / |S|
    double rel_over_pos = 0.0;   // |D_rel| / |D_pos|
};

StatsReport stats_report(std::span<const Scene> scenes, int top_k,
                         double iou_threshold = kDefaultIouThreshold, int threads = 1);

nlohmann::json to_json(const ClassDistribution& dist);
nlohmann::json to_json(const StatsReport& report);

// Prediction dump: a header line with the run config followed by one JSON
// record per triplet: {image, subject_box, object_box, subject_class,
// object_class, predicate, score, s1, s2, s_cls}.
void write_predictions_jsonl(const std::string& path,
                             std::span<const std::vector<TripletPrediction>> per_image,
                             const nlohmann::json& config);
std::vector<std::vector<TripletPrediction>> read_predictions_jsonl(const std::string& path);

}  // namespace vrd
