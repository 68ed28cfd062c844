#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vrdlab/scene.hpp"

namespace vrd {

inline constexpr double kDefaultIouThreshold = 0.5;

// A relationship proposal: an ordered (subject, object) pair of detections.
// Indices refer to the scene's detection list.
struct ProposalPair {
    int subject = 0;
    int object = 0;

    bool operator==(const ProposalPair&) const = default;
};

// One positive class plus a five-way split of the negatives, ordered from
// easiest (both detections inaccurate) to hardest (both detections accurate
// and in relationships, just not with each other).
enum class ProposalClass : int {
    Pos = 0,
    Neg1 = 1,  // neither box matches any ground-truth box
    Neg2 = 2,  // exactly one box matches a ground-truth box
    Neg3 = 3,  // both match, neither belongs to any relationship
    Neg4 = 4,  // both match, exactly one belongs to a relationship
    Neg5 = 5,  // both belong to relationships, but not to a common one
};

inline constexpr int kNumProposalClasses = 6;

inline constexpr std::array<ProposalClass, kNumProposalClasses> kAllProposalClasses = {
    ProposalClass::Pos,  ProposalClass::Neg1, ProposalClass::Neg2,
    ProposalClass::Neg3, ProposalClass::Neg4, ProposalClass::Neg5,
};

const char* to_string(ProposalClass c);
ProposalClass proposal_class_from_string(const std::string& s);

// The proposal set S built from the top-k detections by score.
// `kept` holds the surviving detection indices in score order (stable ties);
// `pairs` holds every (subject, object) combination over them. Self-pairs are
// excluded in General mode and allowed in Hoi mode, where they carry
// invisible-object triplets.
struct ProposalSet {
    std::vector<int> kept;
    std::vector<ProposalPair> pairs;
};

std::vector<int> top_detections(const Scene& scene, int top_k);
ProposalSet generate_proposals(const Scene& scene, int top_k);

// Detection-level helper predicates.
// f_box: the box overlaps some ground-truth box at IoU >= threshold.
// f_rel: the box overlaps either end of some ground-truth relationship at
// IoU >= threshold (role-agnostic by definition: matching only the object
// slot still counts when the box is used as a subject).
bool f_box(const Box& b, const GroundTruth& gt, double iou_threshold = kDefaultIouThreshold);
bool f_rel(const Box& b, const GroundTruth& gt, double iou_threshold = kDefaultIouThreshold);

// Classifies proposals of one scene. Detection-level predicates and
// ground-truth match sets are computed once at construction; classify() only
// reads the cache, so it is safe to call concurrently.
class ProposalClassifier {
public:
    explicit ProposalClassifier(const Scene& scene,
                                double iou_threshold = kDefaultIouThreshold);

    ProposalClass classify(const ProposalPair& p) const;

    bool box_positive(int detection) const { return box_positive_[static_cast<size_t>(detection)]; }
    bool rel_positive(int detection) const { return rel_positive_[static_cast<size_t>(detection)]; }

    // Ground-truth relationship indices the pair realizes (both ends matched
    // in role). Non-empty exactly for Pos proposals.
    std::vector<int> matched_relationships(const ProposalPair& p) const;

private:
    bool pair_positive(const ProposalPair& p) const;

    const Scene* scene_;
    std::vector<bool> box_positive_;
    std::vector<bool> rel_positive_;
    std::vector<std::vector<int>> gt_matches_;  // per detection: matched gt box indices
};

// Same contract as ProposalClassifier::classify, computed by direct
// enumeration over ground truth with no per-detection caching. Kept as an
// independent verification path.
ProposalClass classify_oracle(const ProposalPair& p, const Scene& scene,
                              double iou_threshold = kDefaultIouThreshold);

// Per-class proposal counts for one scene's proposal set, plus the
// detection-level statistics d_pos (accurate detections among the kept set)
// and d_rel (kept detections participating in some positive proposal).
struct ClassDistribution {
    std::array<std::int64_t, kNumProposalClasses> counts{};
    std::int64_t total = 0;
    std::int64_t d_pos = 0;
    std::int64_t d_rel = 0;

    std::int64_t count(ProposalClass c) const { return counts[static_cast<size_t>(c)]; }
    std::int64_t negatives() const { return total - counts[0]; }
};

ClassDistribution distribution(const Scene& scene, int top_k,
                               double iou_threshold = kDefaultIouThreshold);

}  // namespace vrd
