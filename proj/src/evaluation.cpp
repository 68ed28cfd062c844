#include "vrdlab/evaluation.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace vrd {

std::vector<GtTriplet> gt_triplets(const Scene& scene) {
    std::vector<GtTriplet> out;
    out.reserve(scene.ground_truth.relationships.size());
    for (const Relationship& r : scene.ground_truth.relationships) {
        if (r.object == kInvisibleObject) {
            throw std::invalid_argument(
                "gt_triplets: unresolved invisible object; run fill_invisible_objects first");
        }
        const GtBox& s = scene.ground_truth.boxes[static_cast<size_t>(r.subject)];
        const GtBox& o = scene.ground_truth.boxes[static_cast<size_t>(r.object)];
        out.push_back(GtTriplet{s.box, o.box, s.class_id, o.class_id, r.predicate});
    }
    return out;
}

bool match_triplet(const TripletPrediction& pred, const GtTriplet& gt, EvalTask task,
                   double iou_threshold) {
    if (pred.predicate != gt.predicate) return false;
    if (task == EvalTask::Phrase) {
        return iou(union_box(pred.subject_box, pred.object_box),
                   union_box(gt.subject_box, gt.object_box)) >= iou_threshold;
    }
    return iou(pred.subject_box, gt.subject_box) >= iou_threshold &&
           iou(pred.object_box, gt.object_box) >= iou_threshold;
}

double recall_at_n(std::span<const std::vector<TripletPrediction>> predictions,
                   std::span<const std::vector<GtTriplet>> ground_truth, int n, EvalTask task,
                   double iou_threshold) {
    if (predictions.size() != ground_truth.size()) {
        throw std::invalid_argument("recall_at_n: prediction/ground-truth image count mismatch");
    }
    if (n < 1) throw std::invalid_argument("recall_at_n: n must be >= 1");

    std::int64_t total_gt = 0;
    std::int64_t matched_gt = 0;
    for (size_t img = 0; img < predictions.size(); ++img) {
        const auto& gts = ground_truth[img];
        total_gt += static_cast<std::int64_t>(gts.size());
        if (gts.empty() || predictions[img].empty()) continue;

        std::vector<size_t> order(predictions[img].size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            return predictions[img][a].score > predictions[img][b].score;
        });
        if (order.size() > static_cast<size_t>(n)) order.resize(static_cast<size_t>(n));

        std::vector<bool> used(gts.size(), false);
        for (size_t rank : order) {
            const TripletPrediction& pred = predictions[img][rank];
            for (size_t g = 0; g < gts.size(); ++g) {
                if (used[g]) continue;
                if (match_triplet(pred, gts[g], task, iou_threshold)) {
                    used[g] = true;
                    matched_gt += 1;
                    break;
                }
            }
        }
    }
    return total_gt == 0 ? 0.0 : static_cast<double>(matched_gt) / static_cast<double>(total_gt);
}

PRCurve average_precision(std::span<const std::vector<TripletPrediction>> predictions,
                          std::span<const std::vector<GtTriplet>> ground_truth, EvalTask task,
                          double iou_threshold) {
    if (predictions.size() != ground_truth.size()) {
        throw std::invalid_argument("average_precision: image count mismatch");
    }
    std::int64_t total_gt = 0;
    for (const auto& gts : ground_truth) total_gt += static_cast<std::int64_t>(gts.size());

    PRCurve curve;
    if (total_gt == 0) return curve;

    // global ranking, stable in (image, insertion) order on score ties
    struct Ranked {
        size_t image;
        size_t index;
        double score;
    };
    std::vector<Ranked> ranked;
    for (size_t img = 0; img < predictions.size(); ++img) {
        for (size_t i = 0; i < predictions[img].size(); ++i) {
            ranked.push_back(Ranked{img, i, predictions[img][i].score});
        }
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const Ranked& a, const Ranked& b) { return a.score > b.score; });

    std::vector<std::vector<bool>> used(ground_truth.size());
    for (size_t img = 0; img < ground_truth.size(); ++img) {
        used[img].assign(ground_truth[img].size(), false);
    }

    std::int64_t tp = 0, fp = 0;
    std::vector<bool> is_tp(ranked.size(), false);
    std::vector<double> precision(ranked.size()), recall(ranked.size());
    for (size_t k = 0; k < ranked.size(); ++k) {
        const TripletPrediction& pred = predictions[ranked[k].image][ranked[k].index];
        const auto& gts = ground_truth[ranked[k].image];
        bool hit = false;
        for (size_t g = 0; g < gts.size(); ++g) {
            if (used[ranked[k].image][g]) continue;
            if (match_triplet(pred, gts[g], task, iou_threshold)) {
                used[ranked[k].image][g] = true;
                hit = true;
                break;
            }
        }
        (hit ? tp : fp) += 1;
        is_tp[k] = hit;
        precision[k] = static_cast<double>(tp) / static_cast<double>(tp + fp);
        recall[k] = static_cast<double>(tp) / static_cast<double>(total_gt);
    }

    // precision envelope from the right, area accumulated at true positives
    double envelope = 0.0;
    double ap = 0.0;
    for (size_t k = ranked.size(); k-- > 0;) {
        envelope = std::max(envelope, precision[k]);
        if (is_tp[k]) {
            const double prev_recall = k == 0 ? 0.0 : recall[k - 1];
            ap += (recall[k] - prev_recall) * envelope;
        }
    }
    curve.ap = ap;
    curve.points.reserve(ranked.size());
    for (size_t k = 0; k < ranked.size(); ++k) {
        curve.points.push_back(PRPoint{precision[k], recall[k]});
    }
    return curve;
}

namespace {

using PredViews = std::vector<std::vector<TripletPrediction>>;
using GtViews = std::vector<std::vector<GtTriplet>>;

template <typename PredKeep, typename GtKeep>
std::pair<PredViews, GtViews> filtered(std::span<const std::vector<TripletPrediction>> preds,
                                       std::span<const std::vector<GtTriplet>> gts,
                                       PredKeep pred_keep, GtKeep gt_keep) {
    PredViews p(preds.size());
    GtViews g(gts.size());
    for (size_t img = 0; img < preds.size(); ++img) {
        for (const TripletPrediction& x : preds[img]) {
            if (pred_keep(x)) p[img].push_back(x);
        }
    }
    for (size_t img = 0; img < gts.size(); ++img) {
        for (const GtTriplet& x : gts[img]) {
            if (gt_keep(x)) g[img].push_back(x);
        }
    }
    return {std::move(p), std::move(g)};
}

}  // namespace

ApRoleResult ap_role(std::span<const std::vector<TripletPrediction>> predictions,
                     std::span<const std::vector<GtTriplet>> ground_truth,
                     double iou_threshold) {
    std::set<int> gt_verbs;
    for (const auto& gts : ground_truth) {
        for (const GtTriplet& g : gts) gt_verbs.insert(g.predicate);
    }
    std::set<int> pred_verbs;
    for (const auto& preds : predictions) {
        for (const TripletPrediction& p : preds) pred_verbs.insert(p.predicate);
    }

    ApRoleResult result;
    double sum = 0.0;
    for (int verb : gt_verbs) {
        auto [p, g] = filtered(
            predictions, ground_truth,
            [verb](const TripletPrediction& x) { return x.predicate == verb; },
            [verb](const GtTriplet& x) { return x.predicate == verb; });
        const double ap = average_precision(p, g, EvalTask::Relationship, iou_threshold).ap;
        result.per_verb[verb] = ap;
        sum += ap;
    }
    for (int verb : pred_verbs) {
        if (!gt_verbs.contains(verb)) result.verbs_without_gt.push_back(verb);
    }
    result.mean = gt_verbs.empty() ? 0.0 : sum / static_cast<double>(gt_verbs.size());
    return result;
}

HicoResult hico_map(std::span<const std::vector<TripletPrediction>> predictions,
                    std::span<const std::vector<GtTriplet>> ground_truth, HicoMode mode,
                    double iou_threshold) {
    std::set<std::pair<int, int>> pairs;
    for (const auto& gts : ground_truth) {
        for (const GtTriplet& g : gts) pairs.insert({g.predicate, g.object_class});
    }

    HicoResult result;
    double sum = 0.0;
    for (const auto& [verb, category] : pairs) {
        auto keep_pred = [&, verb = verb, category = category](const TripletPrediction& x) {
            if (x.predicate != verb) return false;
            return mode == HicoMode::Default || x.object_class == category;
        };
        auto keep_gt = [verb = verb, category = category](const GtTriplet& x) {
            return x.predicate == verb && x.object_class == category;
        };
        auto [p, g] = filtered(predictions, ground_truth, keep_pred, keep_gt);
        const double ap = average_precision(p, g, EvalTask::Relationship, iou_threshold).ap;
        result.per_pair[{verb, category}] = ap;
        sum += ap;
    }
    result.mean = pairs.empty() ? 0.0 : sum / static_cast<double>(pairs.size());
    return result;
}

}  // namespace vrd
