#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "vrdlab/evaluation.hpp"

using namespace vrd;

namespace {

TripletPrediction pred(Box s, Box o, int predicate, double score, int obj_class = 0) {
    TripletPrediction p;
    p.subject_box = s;
    p.object_box = o;
    p.predicate = predicate;
    p.score = score;
    p.object_class = obj_class;
    p.s1 = 1.0;
    p.s2 = 1.0;
    p.s_cls = score;
    return p;
}

GtTriplet gt(Box s, Box o, int predicate, int obj_class = 0) {
    return GtTriplet{s, o, 0, obj_class, predicate};
}

const Box kA{0, 0, 10, 10};
const Box kB{20, 0, 30, 10};
const Box kC{40, 0, 50, 10};
const Box kFar{200, 200, 210, 210};

}  // namespace

TEST_CASE("match_triplet") {
    const GtTriplet g = gt(kA, kB, 3);
    CHECK(match_triplet(pred(kA, kB, 3, 0.9), g, EvalTask::Relationship));
    CHECK_FALSE(match_triplet(pred(kA, kB, 4, 0.9), g, EvalTask::Relationship));

    // subject IoU 0.6, object IoU 0.4: relationship fails, phrase passes
    const TripletPrediction crafted = pred(Box{0, 0, 10, 6}, Box{20, 0, 30, 4}, 3, 0.9);
    CHECK(iou(crafted.subject_box, g.subject_box) == doctest::Approx(0.6));
    CHECK(iou(crafted.object_box, g.object_box) == doctest::Approx(0.4));
    CHECK_FALSE(match_triplet(crafted, g, EvalTask::Relationship));
    CHECK(iou(union_box(crafted.subject_box, crafted.object_box),
              union_box(g.subject_box, g.object_box)) == doctest::Approx(0.6));
    CHECK(match_triplet(crafted, g, EvalTask::Phrase));
}

TEST_CASE("recall_at_n micro-cases") {
    SUBCASE("all ground truth matched inside the window") {
        const std::vector<std::vector<TripletPrediction>> preds = {
            {pred(kA, kB, 1, 0.9), pred(kB, kC, 2, 0.8)}};
        const std::vector<std::vector<GtTriplet>> gts = {{gt(kA, kB, 1), gt(kB, kC, 2)}};
        CHECK(recall_at_n(preds, gts, 50, EvalTask::Relationship) == doctest::Approx(1.0));
    }
    SUBCASE("no predictions at all") {
        const std::vector<std::vector<TripletPrediction>> preds = {{}};
        const std::vector<std::vector<GtTriplet>> gts = {{gt(kA, kB, 1)}};
        CHECK(recall_at_n(preds, gts, 50, EvalTask::Relationship) == 0.0);
    }
    SUBCASE("one of two ground truths inside the window") {
        const std::vector<std::vector<TripletPrediction>> preds = {
            {pred(kA, kB, 1, 0.9), pred(kFar, kFar, 2, 0.8), pred(kB, kC, 2, 0.7)}};
        const std::vector<std::vector<GtTriplet>> gts = {{gt(kA, kB, 1), gt(kB, kC, 2)}};
        CHECK(recall_at_n(preds, gts, 2, EvalTask::Relationship) == doctest::Approx(0.5));
        CHECK(recall_at_n(preds, gts, 3, EvalTask::Relationship) == doctest::Approx(1.0));
    }
    SUBCASE("each ground truth is creditable once") {
        const std::vector<std::vector<TripletPrediction>> preds = {
            {pred(kA, kB, 1, 0.9), pred(kA, kB, 1, 0.8)}};
        const std::vector<std::vector<GtTriplet>> gts = {{gt(kA, kB, 1), gt(kB, kC, 2)}};
        CHECK(recall_at_n(preds, gts, 10, EvalTask::Relationship) == doctest::Approx(0.5));
    }
}

TEST_CASE("recall is nondecreasing in n") {
    CounterRng rng(55);
    std::vector<std::vector<TripletPrediction>> preds(3);
    std::vector<std::vector<GtTriplet>> gts(3);
    for (int img = 0; img < 3; ++img) {
        for (int i = 0; i < 6; ++i) {
            const double x = rng.uniform(0, 100), y = rng.uniform(0, 100);
            const Box s{x, y, x + 10, y + 10};
            const Box o{x + 5, y, x + 15, y + 10};
            if (i < 3) gts[img].push_back(gt(s, o, i % 2));
            preds[img].push_back(pred(s, o, static_cast<int>(rng.below(2)), rng.uniform()));
        }
    }
    double prev = 0.0;
    for (int n : {1, 2, 5, 10, 50, 100}) {
        const double r = recall_at_n(preds, gts, n, EvalTask::Relationship);
        CHECK(r >= prev);
        prev = r;
    }
}

TEST_CASE("average precision micro-cases") {
    SUBCASE("single correct prediction") {
        const std::vector<std::vector<TripletPrediction>> preds = {{pred(kA, kB, 1, 0.9)}};
        const std::vector<std::vector<GtTriplet>> gts = {{gt(kA, kB, 1)}};
        CHECK(average_precision(preds, gts, EvalTask::Relationship).ap == doctest::Approx(1.0));
    }
    SUBCASE("wrong prediction outranks the correct one") {
        const std::vector<std::vector<TripletPrediction>> preds = {
            {pred(kFar, kFar, 1, 0.9), pred(kA, kB, 1, 0.8)}};
        const std::vector<std::vector<GtTriplet>> gts = {{gt(kA, kB, 1)}};
        // PR points: (P=0, R=0) then (P=1/2, R=1); area = 0.5
        CHECK(average_precision(preds, gts, EvalTask::Relationship).ap == doctest::Approx(0.5));
    }
    SUBCASE("no correct predictions") {
        const std::vector<std::vector<TripletPrediction>> preds = {{pred(kFar, kFar, 1, 0.9)}};
        const std::vector<std::vector<GtTriplet>> gts = {{gt(kA, kB, 1)}};
        CHECK(average_precision(preds, gts, EvalTask::Relationship).ap == 0.0);
    }
    SUBCASE("recall never decreases along the curve") {
        const std::vector<std::vector<TripletPrediction>> preds = {
            {pred(kA, kB, 1, 0.9), pred(kFar, kFar, 1, 0.85), pred(kB, kC, 1, 0.8)}};
        const std::vector<std::vector<GtTriplet>> gts = {{gt(kA, kB, 1), gt(kB, kC, 1)}};
        const PRCurve curve = average_precision(preds, gts, EvalTask::Relationship);
        for (size_t i = 1; i < curve.points.size(); ++i) {
            CHECK(curve.points[i].recall >= curve.points[i - 1].recall);
        }
    }
}

TEST_CASE("average precision depends only on the ranking") {
    CounterRng rng(66);
    std::vector<std::vector<TripletPrediction>> preds(2);
    std::vector<std::vector<GtTriplet>> gts(2);
    for (int img = 0; img < 2; ++img) {
        for (int i = 0; i < 8; ++i) {
            const double x = rng.uniform(0, 100), y = rng.uniform(0, 100);
            const Box s{x, y, x + 10, y + 10};
            const Box o{x + 3, y, x + 13, y + 10};
            if (i < 4) gts[img].push_back(gt(s, o, i % 3));
            preds[img].push_back(
                pred(s, o, static_cast<int>(rng.below(3)), rng.uniform(0.1, 0.9)));
        }
    }
    const double base = average_precision(preds, gts, EvalTask::Relationship).ap;

    // strictly monotone transformation of every score
    std::vector<std::vector<TripletPrediction>> warped = preds;
    for (auto& image : warped) {
        for (TripletPrediction& p : image) p.score = std::exp(3.0 * p.score) + 1.0;
    }
    CHECK(average_precision(warped, gts, EvalTask::Relationship).ap == doctest::Approx(base));
}

TEST_CASE("true positives never exceed the ground-truth count") {
    const std::vector<std::vector<TripletPrediction>> preds = {
        {pred(kA, kB, 1, 0.9), pred(kA, kB, 1, 0.8), pred(kA, kB, 1, 0.7)}};
    const std::vector<std::vector<GtTriplet>> gts = {{gt(kA, kB, 1)}};
    const PRCurve curve = average_precision(preds, gts, EvalTask::Relationship);
    CHECK(curve.points.back().recall == doctest::Approx(1.0));
    // only one of the three duplicates may count
    CHECK(curve.points.back().precision == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("ap_role") {
    SUBCASE("one verb, perfect predictions") {
        const std::vector<std::vector<TripletPrediction>> preds = {{pred(kA, kB, 2, 0.9)}};
        const std::vector<std::vector<GtTriplet>> gts = {{gt(kA, kB, 2)}};
        const ApRoleResult r = ap_role(preds, gts);
        CHECK(r.mean == doctest::Approx(1.0));
        CHECK(r.per_verb.at(2) == doctest::Approx(1.0));
    }
    SUBCASE("two verbs with AP 1 and 0") {
        const std::vector<std::vector<TripletPrediction>> preds = {
            {pred(kA, kB, 0, 0.9), pred(kFar, kFar, 1, 0.8)}};
        const std::vector<std::vector<GtTriplet>> gts = {{gt(kA, kB, 0), gt(kB, kC, 1)}};
        const ApRoleResult r = ap_role(preds, gts);
        CHECK(r.mean == doctest::Approx(0.5));
    }
    SUBCASE("three-verb micro-case, hand-computed") {
        // verb 0: TP .9, FP .8, TP .7 over two GTs -> AP = .5*1 + .5*(2/3) = 5/6
        // verb 1: one GT, no predictions -> AP = 0
        // verb 2: single TP -> AP = 1
        const std::vector<std::vector<TripletPrediction>> preds = {
            {pred(kA, kB, 0, 0.9), pred(kFar, kFar, 0, 0.8), pred(kB, kC, 0, 0.7),
             pred(kA, kC, 2, 0.6)}};
        const std::vector<std::vector<GtTriplet>> gts = {
            {gt(kA, kB, 0), gt(kB, kC, 0), gt(kC, kA, 1), gt(kA, kC, 2)}};
        const ApRoleResult r = ap_role(preds, gts);
        CHECK(r.per_verb.at(0) == doctest::Approx(5.0 / 6.0));
        CHECK(r.per_verb.at(1) == 0.0);
        CHECK(r.per_verb.at(2) == doctest::Approx(1.0));
        CHECK(r.mean == doctest::Approx((5.0 / 6.0 + 0.0 + 1.0) / 3.0));
    }
    SUBCASE("verbs without ground truth are reported, not averaged") {
        const std::vector<std::vector<TripletPrediction>> preds = {
            {pred(kA, kB, 0, 0.9), pred(kA, kB, 9, 0.8)}};
        const std::vector<std::vector<GtTriplet>> gts = {{gt(kA, kB, 0)}};
        const ApRoleResult r = ap_role(preds, gts);
        CHECK(r.mean == doctest::Approx(1.0));
        REQUIRE(r.verbs_without_gt.size() == 1);
        CHECK(r.verbs_without_gt[0] == 9);
    }
}

TEST_CASE("hico mAP in default and known-objects modes") {
    SUBCASE("single category: restriction is vacuous") {
        const std::vector<std::vector<TripletPrediction>> preds = {
            {pred(kA, kB, 1, 0.9, 5), pred(kFar, kFar, 1, 0.8, 5)}};
        const std::vector<std::vector<GtTriplet>> gts = {{gt(kA, kB, 1, 5)}};
        CHECK(hico_map(preds, gts, HicoMode::Default).mean ==
              doctest::Approx(hico_map(preds, gts, HicoMode::KnownObjects).mean));
    }
    SUBCASE("wrong-category false positives only hurt the default mode") {
        const std::vector<std::vector<TripletPrediction>> preds = {
            {pred(kFar, kFar, 1, 0.9, 7),   // wrong category, misses the ground truth
             pred(kA, kB, 1, 0.8, 5)}};
        const std::vector<std::vector<GtTriplet>> gts = {{gt(kA, kB, 1, 5)}};
        const double default_map = hico_map(preds, gts, HicoMode::Default).mean;
        const double known_map = hico_map(preds, gts, HicoMode::KnownObjects).mean;
        CHECK(default_map == doctest::Approx(0.5));
        CHECK(known_map == doctest::Approx(1.0));
        CHECK(known_map >= default_map);
    }
    SUBCASE("empty prediction set scores zero") {
        const std::vector<std::vector<TripletPrediction>> preds = {{}};
        const std::vector<std::vector<GtTriplet>> gts = {{gt(kA, kB, 1, 5)}};
        CHECK(hico_map(preds, gts, HicoMode::Default).mean == 0.0);
    }
}

TEST_CASE("gt_triplets expands relationships and requires resolved objects") {
    const Scene scene = vrd::testing::six_class_scene();
    const std::vector<GtTriplet> triplets = gt_triplets(scene);
    REQUIRE(triplets.size() == 2);
    CHECK(triplets[0].predicate == 1);
    CHECK(triplets[1].predicate == 2);
    CHECK(triplets[0].subject_box == scene.ground_truth.boxes[0].box);

    Scene invisible = scene;
    invisible.ground_truth.relationships[0].object = kInvisibleObject;
    CHECK_THROWS_AS(gt_triplets(invisible), std::invalid_argument);
}
