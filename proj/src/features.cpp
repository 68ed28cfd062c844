#include "vrdlab/features.hpp"

#include <algorithm>
#include <cmath>

#include "vrdlab/rng.hpp"

namespace vrd {

namespace {

constexpr std::uint64_t kClassEmbedKey = 0xC1A5'5EED;
constexpr std::uint64_t kPairEmbedKey = 0xED6E'5EED;
constexpr std::uint64_t kNodeNoiseKey = 0x0D;
constexpr std::uint64_t kEdgeNoiseKey = 0x0E;
constexpr double kNoiseScale = 0.05;

double safe_log(double v) { return std::log(std::max(v, 1e-9)); }

void add_noise(Tensor& f, std::uint64_t key) {
    CounterRng rng(key);
    for (int i = 0; i < f.size(); ++i) f[i] += kNoiseScale * rng.normal();
}

void fill_embedding(Tensor& f, int from, std::uint64_t key) {
    CounterRng rng(key);
    for (int i = from; i < f.size(); ++i) f[i] = rng.uniform(-0.5, 0.5);
}

}  // namespace

FeatureFrame scene_frame(const Scene& scene) {
    FeatureFrame frame;
    for (const Detection& d : scene.detections) {
        frame.width = std::max(frame.width, d.box.x2);
        frame.height = std::max(frame.height, d.box.y2);
    }
    for (const GtBox& g : scene.ground_truth.boxes) {
        frame.width = std::max(frame.width, g.box.x2);
        frame.height = std::max(frame.height, g.box.y2);
    }
    return frame;
}

Tensor toy_node_feature(const Detection& det, int slot, const FeatureFrame& frame, int dim,
                        std::uint64_t seed) {
    Tensor f({dim});
    const Box& b = det.box;
    const double geometry[] = {
        b.center_x() / frame.width,
        b.center_y() / frame.height,
        b.width() / frame.width,
        b.height() / frame.height,
        safe_log(b.width() / frame.width),
        safe_log(b.height() / frame.height),
        safe_log(b.width() / b.height()),
        det.score,
    };
    const int geo = std::min<int>(dim, 8);
    for (int i = 0; i < geo; ++i) f[i] = geometry[i];
    fill_embedding(f, geo, hash_mix(kClassEmbedKey, static_cast<std::uint64_t>(det.class_id)));
    add_noise(f, hash_mix(seed, kNodeNoiseKey, static_cast<std::uint64_t>(slot)));
    return f;
}

Tensor toy_edge_feature(const Detection& a, const Detection& b, int slot_a, int slot_b,
                        const FeatureFrame& frame, int dim, std::uint64_t seed) {
    Tensor f({dim});
    const Box u = union_box(a.box, b.box);
    const double iw = std::max(0.0, std::min(a.box.x2, b.box.x2) - std::max(a.box.x1, b.box.x1));
    const double ih = std::max(0.0, std::min(a.box.y2, b.box.y2) - std::max(a.box.y1, b.box.y1));
    const double inter = iw * ih;
    const double dx = (b.box.center_x() - a.box.center_x()) / frame.width;
    const double dy = (b.box.center_y() - a.box.center_y()) / frame.height;
    const double geometry[] = {
        u.center_x() / frame.width,
        u.center_y() / frame.height,
        u.width() / frame.width,
        u.height() / frame.height,
        dx,
        dy,
        std::hypot(dx, dy),
        inter / (a.box.area() + b.box.area() - inter),
        safe_log(a.box.width() / b.box.width()),
        safe_log(a.box.height() / b.box.height()),
        inter / std::min(a.box.area(), b.box.area()),
        a.score * b.score,
    };
    const int geo = std::min<int>(dim, 12);
    for (int i = 0; i < geo; ++i) f[i] = geometry[i];
    fill_embedding(f, geo,
                   hash_mix(kPairEmbedKey, static_cast<std::uint64_t>(a.class_id),
                            static_cast<std::uint64_t>(b.class_id)));
    add_noise(f, hash_mix(seed, kEdgeNoiseKey,
                          static_cast<std::uint64_t>(slot_a) * 0x10001ULL +
                              static_cast<std::uint64_t>(slot_b)));
    return f;
}

RelationshipFeatures extract_toy_features(const Scene& scene, const ProposalSet& proposals,
                                          int dim, std::uint64_t seed) {
    RelationshipFeatures out;
    out.kept = proposals.kept;
    const int n = static_cast<int>(out.kept.size());
    if (n == 0) return out;

    const FeatureFrame frame = scene_frame(scene);
    out.graph.nodes = Tensor({n, dim});
    out.graph.edges = Tensor({n, n, dim});

    for (int i = 0; i < n; ++i) {
        const Detection& di = scene.detections[static_cast<size_t>(out.kept[static_cast<size_t>(i)])];
        const Tensor fi = toy_node_feature(di, i, frame, dim, seed);
        for (int k = 0; k < dim; ++k) out.graph.nodes.at(i, k) = fi[k];
        for (int j = 0; j < n; ++j) {
            const Detection& dj =
                scene.detections[static_cast<size_t>(out.kept[static_cast<size_t>(j)])];
            const Tensor fe = toy_edge_feature(di, dj, i, j, frame, dim, seed);
            for (int k = 0; k < dim; ++k) out.graph.edges.at(i, j, k) = fe[k];
        }
    }
    return out;
}

}  // namespace vrd
