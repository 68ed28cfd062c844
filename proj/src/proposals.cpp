#include "vrdlab/proposals.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace vrd {

const char* to_string(ProposalClass c) {
    switch (c) {
        case ProposalClass::Pos: return "POS";
        case ProposalClass::Neg1: return "NEG1";
        case ProposalClass::Neg2: return "NEG2";
        case ProposalClass::Neg3: return "NEG3";
        case ProposalClass::Neg4: return "NEG4";
        case ProposalClass::Neg5: return "NEG5";
    }
    return "?";
}

ProposalClass proposal_class_from_string(const std::string& s) {
    for (ProposalClass c : kAllProposalClasses) {
        if (s == to_string(c)) return c;
    }
    throw std::invalid_argument("unknown proposal class: " + s);
}

std::vector<int> top_detections(const Scene& scene, int top_k) {
    if (top_k < 1) throw std::invalid_argument("top_detections: top_k must be >= 1");
    std::vector<int> order(scene.detections.size());
    std::iota(order.begin(), order.end(), 0);
    // stable: equal scores keep input order
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return scene.detections[static_cast<size_t>(a)].score >
               scene.detections[static_cast<size_t>(b)].score;
    });
    if (static_cast<int>(order.size()) > top_k) order.resize(static_cast<size_t>(top_k));
    return order;
}

ProposalSet generate_proposals(const Scene& scene, int top_k) {
    ProposalSet out;
    out.kept = top_detections(scene, top_k);

    std::vector<int> subjects;
    if (scene.mode == SceneMode::Hoi) {
        for (int i : out.kept) {
            if (scene.detections[static_cast<size_t>(i)].class_id == scene.human_class_id) {
                subjects.push_back(i);
            }
        }
    } else {
        subjects = out.kept;
    }

    out.pairs.reserve(subjects.size() * out.kept.size());
    for (int s : subjects) {
        for (int o : out.kept) {
            if (scene.mode == SceneMode::General && s == o) continue;
            out.pairs.push_back(ProposalPair{s, o});
        }
    }
    return out;
}

bool f_box(const Box& b, const GroundTruth& gt, double iou_threshold) {
    for (const GtBox& g : gt.boxes) {
        if (iou(b, g.box) >= iou_threshold) return true;
    }
    return false;
}

bool f_rel(const Box& b, const GroundTruth& gt, double iou_threshold) {
    for (const Relationship& r : gt.relationships) {
        const Box& g1 = gt.boxes[static_cast<size_t>(r.subject)].box;
        const Box& g2 = gt.boxes[static_cast<size_t>(r.object)].box;
        if (max_iou_pair(b, g1, g2) >= iou_threshold) return true;
    }
    return false;
}

ProposalClassifier::ProposalClassifier(const Scene& scene, double iou_threshold)
    : scene_(&scene) {
    const size_t n = scene.detections.size();
    box_positive_.assign(n, false);
    rel_positive_.assign(n, false);
    gt_matches_.assign(n, {});

    for (size_t i = 0; i < n; ++i) {
        const Box& b = scene.detections[i].box;
        for (size_t g = 0; g < scene.ground_truth.boxes.size(); ++g) {
            if (iou(b, scene.ground_truth.boxes[g].box) >= iou_threshold) {
                gt_matches_[i].push_back(static_cast<int>(g));
            }
        }
        box_positive_[i] = !gt_matches_[i].empty();
        rel_positive_[i] = f_rel(b, scene.ground_truth, iou_threshold);
    }
}

bool ProposalClassifier::pair_positive(const ProposalPair& p) const {
    const auto& sub_matches = gt_matches_[static_cast<size_t>(p.subject)];
    const auto& obj_matches = gt_matches_[static_cast<size_t>(p.object)];
    if (sub_matches.empty() || obj_matches.empty()) return false;
    for (const Relationship& r : scene_->ground_truth.relationships) {
        const bool s_ok = std::find(sub_matches.begin(), sub_matches.end(), r.subject) != sub_matches.end();
        if (!s_ok) continue;
        const bool o_ok = std::find(obj_matches.begin(), obj_matches.end(), r.object) != obj_matches.end();
        if (o_ok) return true;
    }
    return false;
}

std::vector<int> ProposalClassifier::matched_relationships(const ProposalPair& p) const {
    std::vector<int> out;
    const auto& sub_matches = gt_matches_[static_cast<size_t>(p.subject)];
    const auto& obj_matches = gt_matches_[static_cast<size_t>(p.object)];
    const auto& rels = scene_->ground_truth.relationships;
    for (size_t k = 0; k < rels.size(); ++k) {
        const bool s_ok = std::find(sub_matches.begin(), sub_matches.end(), rels[k].subject) != sub_matches.end();
        const bool o_ok = std::find(obj_matches.begin(), obj_matches.end(), rels[k].object) != obj_matches.end();
        if (s_ok && o_ok) out.push_back(static_cast<int>(k));
    }
    return out;
}

ProposalClass ProposalClassifier::classify(const ProposalPair& p) const {
    if (pair_positive(p)) return ProposalClass::Pos;

    const bool b1 = box_positive_[static_cast<size_t>(p.subject)];
    const bool b2 = box_positive_[static_cast<size_t>(p.object)];
    if (!b1 && !b2) return ProposalClass::Neg1;
    if (b1 != b2) return ProposalClass::Neg2;

    // both boxes accurate from here on
    const bool r1 = rel_positive_[static_cast<size_t>(p.subject)];
    const bool r2 = rel_positive_[static_cast<size_t>(p.object)];
    if (!r1 && !r2) return ProposalClass::Neg3;
    if (r1 != r2) return ProposalClass::Neg4;
    return ProposalClass::Neg5;
}

ProposalClass classify_oracle(const ProposalPair& p, const Scene& scene,
                              double iou_threshold) {
    const GroundTruth& gt = scene.ground_truth;
    const Box& sub = scene.detections[static_cast<size_t>(p.subject)].box;
    const Box& obj = scene.detections[static_cast<size_t>(p.object)].box;

    for (const Relationship& r : gt.relationships) {
        const Box& g1 = gt.boxes[static_cast<size_t>(r.subject)].box;
        const Box& g2 = gt.boxes[static_cast<size_t>(r.object)].box;
        if (std::min(iou(sub, g1), iou(obj, g2)) >= iou_threshold) {
            return ProposalClass::Pos;
        }
    }

    const bool b1 = f_box(sub, gt, iou_threshold);
    const bool b2 = f_box(obj, gt, iou_threshold);
    if (!b1 && !b2) return ProposalClass::Neg1;
    if ((!b1 && b2) || (b1 && !b2)) return ProposalClass::Neg2;

    const bool r1 = f_rel(sub, gt, iou_threshold);
    const bool r2 = f_rel(obj, gt, iou_threshold);
    if (b1 && !r1 && b2 && !r2) return ProposalClass::Neg3;
    if ((r1 && b2 && !r2) || (b1 && !r1 && r2)) return ProposalClass::Neg4;
    return ProposalClass::Neg5;
}

ClassDistribution distribution(const Scene& scene, int top_k, double iou_threshold) {
    const ProposalSet set = generate_proposals(scene, top_k);
    const ProposalClassifier cls(scene, iou_threshold);

    ClassDistribution out;
    out.total = static_cast<std::int64_t>(set.pairs.size());

    std::vector<bool> in_positive(scene.detections.size(), false);
    for (const ProposalPair& p : set.pairs) {
        const ProposalClass c = cls.classify(p);
        out.counts[static_cast<size_t>(c)] += 1;
        if (c == ProposalClass::Pos) {
            in_positive[static_cast<size_t>(p.subject)] = true;
            in_positive[static_cast<size_t>(p.object)] = true;
        }
    }
    for (int i : set.kept) {
        if (cls.box_positive(i)) out.d_pos += 1;
        if (in_positive[static_cast<size_t>(i)]) out.d_rel += 1;
    }
    return out;
}

}  // namespace vrd
