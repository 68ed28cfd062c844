#pragma once

#include <map>
#include <span>
#include <utility>
#include <vector>

#include "vrdlab/pipeline.hpp"

namespace vrd {

struct GtTriplet {
    Box subject_box;
    Box object_box;
    int subject_class = 0;
    int object_class = 0;
    int predicate = 0;
};

// Expands a scene's ground-truth relationships into matchable triplets.
std::vector<GtTriplet> gt_triplets(const Scene& scene);

enum class EvalTask {
    Relationship,  // subject and object boxes matched separately
    Phrase,        // the pair matched as one union box
};

enum class HicoMode {
    Default,       // candidates are all predictions of the verb
    KnownObjects,  // candidates restricted to the pair's object category
};

// Relationship task: predicate equal and both boxes at IoU >= threshold.
// Phrase task: predicate equal and union boxes at IoU >= threshold.
bool match_triplet(const TripletPrediction& pred, const GtTriplet& gt, EvalTask task,
                   double iou_threshold = kDefaultIouThreshold);

// Fraction of ground-truth triplets matched by the top-n predictions per
// image, each ground truth creditable once, greedy in score order.
// Aggregated over images as total matched / total ground truth.
double recall_at_n(std::span<const std::vector<TripletPrediction>> predictions,
                   std::span<const std::vector<GtTriplet>> ground_truth, int n, EvalTask task,
                   double iou_threshold = kDefaultIouThreshold);

struct PRPoint {
    double precision = 0.0;
    double recall = 0.0;
};

// Exact area under the precision-recall curve (all-point interpolation,
// precision envelope from the right). recall is nondecreasing along points.
struct PRCurve {
    std::vector<PRPoint> points;
    double ap = 0.0;
};

PRCurve average_precision(std::span<const std::vector<TripletPrediction>> predictions,
                          std::span<const std::vector<GtTriplet>> ground_truth, EvalTask task,
                          double iou_threshold = kDefaultIouThreshold);

// Mean AP over verbs with ground-truth instances; verbs that appear only in
// predictions are listed separately instead of entering the mean.
struct ApRoleResult {
    std::map<int, double> per_verb;
    std::vector<int> verbs_without_gt;
    double mean = 0.0;
};

ApRoleResult ap_role(std::span<const std::vector<TripletPrediction>> predictions,
                     std::span<const std::vector<GtTriplet>> ground_truth,
                     double iou_threshold = kDefaultIouThreshold);

// Mean AP over (verb, object-category) pairs present in the ground truth.
struct HicoResult {
    std::map<std::pair<int, int>, double> per_pair;  // (verb, object category) -> AP
    double mean = 0.0;
};

HicoResult hico_map(std::span<const std::vector<TripletPrediction>> predictions,
                    std::span<const std::vector<GtTriplet>> ground_truth, HicoMode mode,
                    double iou_threshold = kDefaultIouThreshold);

}  // namespace vrd
