#include <doctest.h>

#include "fixtures.hpp"
#include "vrdlab/proposals.hpp"

using namespace vrd;
using vrd::testing::random_scenes;
using vrd::testing::six_class_scene;

TEST_CASE("generate_proposals in general mode excludes self-pairs") {
    Scene scene;
    scene.mode = SceneMode::General;
    for (int i = 0; i < 3; ++i) {
        scene.detections.push_back(Detection{Box{10.0 * i, 0, 10.0 * i + 5, 5}, 0, 0.9 - 0.1 * i});
    }
    const ProposalSet set = generate_proposals(scene, 3);
    CHECK(set.pairs.size() == 6);
    for (const ProposalPair& p : set.pairs) CHECK(p.subject != p.object);
}

TEST_CASE("generate_proposals in HOI mode pairs humans with everything, self-pairs included") {
    Scene scene;
    scene.mode = SceneMode::Hoi;
    scene.human_class_id = 0;
    for (int i = 0; i < 5; ++i) {
        scene.detections.push_back(
            Detection{Box{10.0 * i, 0, 10.0 * i + 5, 5}, i < 2 ? 0 : 1, 0.9 - 0.1 * i});
    }
    const ProposalSet set = generate_proposals(scene, 5);
    CHECK(set.pairs.size() == 10);  // 2 humans x 5 detections
    int self_pairs = 0;
    for (const ProposalPair& p : set.pairs) {
        CHECK(scene.detections[p.subject].class_id == 0);
        if (p.subject == p.object) ++self_pairs;
    }
    CHECK(self_pairs == 2);
}

TEST_CASE("top-k truncation sorts by score with stable ties") {
    Scene scene;
    scene.mode = SceneMode::General;
    scene.detections = {
        Detection{Box{0, 0, 1, 1}, 0, 0.5},
        Detection{Box{1, 0, 2, 1}, 0, 0.9},
        Detection{Box{2, 0, 3, 1}, 0, 0.5},
        Detection{Box{3, 0, 4, 1}, 0, 0.7},
    };
    const std::vector<int> kept = top_detections(scene, 3);
    CHECK(kept == std::vector<int>{1, 3, 0});

    const ProposalSet set = generate_proposals(scene, 100);
    CHECK(set.kept == std::vector<int>{1, 3, 0, 2});
    CHECK(set.pairs.size() == 12);
}

TEST_CASE("empty detections give an empty proposal set") {
    Scene scene;
    const ProposalSet set = generate_proposals(scene, 10);
    CHECK(set.pairs.empty());
    CHECK(set.kept.empty());
}

TEST_CASE("hundred human detections give the full ten thousand pairs") {
    Scene scene;
    scene.mode = SceneMode::Hoi;
    scene.human_class_id = 0;
    for (int i = 0; i < 120; ++i) {
        scene.detections.push_back(
            Detection{Box{double(i), 0, double(i) + 1, 1}, 0, 1.0 - 0.001 * i});
    }
    CHECK(generate_proposals(scene, 100).pairs.size() == 10000);
}

TEST_CASE("f_box and f_rel helpers") {
    const Scene scene = six_class_scene();
    const GroundTruth& gt = scene.ground_truth;

    SUBCASE("exact ground-truth match") { CHECK(f_box(gt.boxes[0].box, gt)); }
    SUBCASE("disjoint box") { CHECK_FALSE(f_box(Box{500, 500, 510, 510}, gt)); }
    SUBCASE("boundary IoU exactly 0.5 is inclusive") {
        // half-overlap with g0 = (0,0,10,10): inter 50, union 100
        const Box half{0, 0, 10, 5};
        CHECK(iou(half, gt.boxes[0].box) == doctest::Approx(0.5));
        CHECK(f_box(half, gt));
    }
    SUBCASE("f_rel false when no relationships exist") {
        GroundTruth no_rel = gt;
        no_rel.relationships.clear();
        CHECK_FALSE(f_rel(gt.boxes[0].box, no_rel));
    }
    SUBCASE("matching the subject box of a relationship sets f_rel") {
        CHECK(f_rel(gt.boxes[0].box, gt));
    }
    SUBCASE("matching a box outside all relationships leaves f_rel false") {
        CHECK(f_box(gt.boxes[2].box, gt));
        CHECK_FALSE(f_rel(gt.boxes[2].box, gt));
    }
}

TEST_CASE("six-class fixture classifies as hand-derived") {
    const Scene scene = six_class_scene();
    const ProposalClassifier cls(scene);

    CHECK(cls.classify(ProposalPair{0, 1}) == ProposalClass::Pos);
    CHECK(cls.classify(ProposalPair{2, 3}) == ProposalClass::Neg1);
    CHECK(cls.classify(ProposalPair{0, 2}) == ProposalClass::Neg2);
    CHECK(cls.classify(ProposalPair{4, 5}) == ProposalClass::Neg3);
    CHECK(cls.classify(ProposalPair{0, 4}) == ProposalClass::Neg4);
    // both in relationships, but with different partners
    CHECK(cls.classify(ProposalPair{0, 6}) == ProposalClass::Neg5);
    // positive in reversed roles is not positive
    CHECK(cls.classify(ProposalPair{1, 0}) == ProposalClass::Neg5);
}

TEST_CASE("oracle agrees with the cached classifier on the fixture") {
    const Scene scene = six_class_scene();
    const ProposalSet set = generate_proposals(scene, 100);
    const ProposalClassifier cls(scene);
    for (const ProposalPair& p : set.pairs) {
        CHECK(cls.classify(p) == classify_oracle(p, scene));
    }
}

TEST_CASE("oracle equivalence and partition on random scenes") {
    for (bool hoi : {false, true}) {
        const std::vector<Scene> scenes = random_scenes(40, hoi ? 7 : 3, hoi);
        for (const Scene& scene : scenes) {
            const ProposalSet set = generate_proposals(scene, 50);
            const ProposalClassifier cls(scene);
            ClassDistribution tally;
            for (const ProposalPair& p : set.pairs) {
                const ProposalClass c = cls.classify(p);
                CHECK(c == classify_oracle(p, scene));
                tally.counts[static_cast<size_t>(c)] += 1;

                // positives imply both detections accurate and in relationships
                if (c == ProposalClass::Pos) {
                    CHECK(cls.box_positive(p.subject));
                    CHECK(cls.box_positive(p.object));
                    CHECK(cls.rel_positive(p.subject));
                    CHECK(cls.rel_positive(p.object));
                }
                if (c == ProposalClass::Neg5) {
                    CHECK(cls.rel_positive(p.subject));
                    CHECK(cls.rel_positive(p.object));
                    CHECK(cls.matched_relationships(p).empty());
                }
            }
            std::int64_t sum = 0;
            for (std::int64_t n : tally.counts) sum += n;
            CHECK(sum == static_cast<std::int64_t>(set.pairs.size()));
        }
    }
}

TEST_CASE("distribution matches the fixture hand tally") {
    const Scene scene = six_class_scene();
    const ClassDistribution dist = distribution(scene, 100);

    CHECK(dist.total == 42);
    CHECK(dist.count(ProposalClass::Pos) == 1);
    CHECK(dist.count(ProposalClass::Neg1) == 2);
    CHECK(dist.count(ProposalClass::Neg2) == 20);
    CHECK(dist.count(ProposalClass::Neg3) == 2);
    CHECK(dist.count(ProposalClass::Neg4) == 12);
    CHECK(dist.count(ProposalClass::Neg5) == 5);
    CHECK(dist.d_pos == 5);
    CHECK(dist.d_rel == 2);
}

TEST_CASE("distribution with zero relationships has no positives and no NEG4/NEG5") {
    Scene scene = six_class_scene();
    scene.ground_truth.relationships.clear();
    const ClassDistribution dist = distribution(scene, 100);
    CHECK(dist.count(ProposalClass::Pos) == 0);
    CHECK(dist.count(ProposalClass::Neg4) == 0);
    CHECK(dist.count(ProposalClass::Neg5) == 0);
    CHECK(dist.d_rel == 0);
    CHECK(dist.total == 42);
}

TEST_CASE("d_rel never exceeds d_pos") {
    const std::vector<Scene> scenes = random_scenes(30, 11);
    for (const Scene& scene : scenes) {
        const ClassDistribution dist = distribution(scene, 100);
        CHECK(dist.d_rel <= dist.d_pos);
        CHECK(dist.d_pos <= static_cast<std::int64_t>(scene.detections.size()));
    }
}
