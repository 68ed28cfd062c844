#include "vrdlab/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <thread>

#include "vrdlab/rng.hpp"

namespace vrd {

namespace {

constexpr const char* kAnnotationSchema = "vrdlab-annotations";
constexpr int kAnnotationVersion = 1;
constexpr const char* kPredictionSchema = "vrdlab-predictions";
constexpr int kPredictionVersion = 1;

std::string where(size_t image, const char* field, size_t record) {
    return "image " + std::to_string(image) + ", " + field + "[" + std::to_string(record) + "]";
}

Box parse_box(const nlohmann::json& arr, const std::string& context) {
    Box b{arr.at(0).get<double>(), arr.at(1).get<double>(), arr.at(2).get<double>(),
          arr.at(3).get<double>()};
    if (!b.valid()) throw AnnotationError(context + ": degenerate box");
    return b;
}

}  // namespace

void save_annotations(const std::string& path, const AnnotationData& data) {
    nlohmann::json root;
    root["schema"] = kAnnotationSchema;
    root["version"] = kAnnotationVersion;
    root["mode"] = data.mode == SceneMode::Hoi ? "hoi" : "general";
    if (data.mode == SceneMode::Hoi) root["human_class_id"] = data.human_class_id;
    if (!data.config.is_null()) root["config"] = data.config;

    nlohmann::json images = nlohmann::json::array();
    for (const Scene& scene : data.scenes) {
        nlohmann::json img;
        nlohmann::json gt_boxes = nlohmann::json::array();
        for (const GtBox& g : scene.ground_truth.boxes) {
            gt_boxes.push_back({g.box.x1, g.box.y1, g.box.x2, g.box.y2, g.class_id});
        }
        nlohmann::json rels = nlohmann::json::array();
        for (const Relationship& r : scene.ground_truth.relationships) {
            rels.push_back({r.subject, r.object, r.predicate});
        }
        nlohmann::json dets = nlohmann::json::array();
        for (const Detection& d : scene.detections) {
            dets.push_back({d.box.x1, d.box.y1, d.box.x2, d.box.y2, d.class_id, d.score});
        }
        img["gt_boxes"] = std::move(gt_boxes);
        img["gt_relationships"] = std::move(rels);
        img["detections"] = std::move(dets);
        images.push_back(std::move(img));
    }
    root["images"] = std::move(images);

    std::ofstream os(path);
    if (!os) throw AnnotationError("cannot open " + path + " for writing");
    os << root.dump(2) << "\n";
    if (!os) throw AnnotationError("write failed for " + path);
}

AnnotationData load_annotations(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw AnnotationError("cannot open " + path);
    nlohmann::json root;
    try {
        is >> root;
    } catch (const nlohmann::json::exception& e) {
        throw AnnotationError(path + ": invalid JSON: " + e.what());
    }

    if (root.value("schema", "") != kAnnotationSchema) {
        throw AnnotationError(path + ": not an annotation file (schema mismatch)");
    }
    if (root.value("version", 0) != kAnnotationVersion) {
        throw AnnotationError(path + ": unsupported version " +
                              std::to_string(root.value("version", 0)));
    }

    AnnotationData data;
    const std::string mode = root.value("mode", "general");
    if (mode == "hoi") {
        data.mode = SceneMode::Hoi;
        if (!root.contains("human_class_id")) {
            throw AnnotationError(path + ": hoi mode requires human_class_id");
        }
        data.human_class_id = root["human_class_id"].get<int>();
    } else if (mode == "general") {
        data.mode = SceneMode::General;
    } else {
        throw AnnotationError(path + ": unknown mode '" + mode + "'");
    }
    if (root.contains("config")) data.config = root["config"];

    size_t image_index = 0;
    for (const nlohmann::json& img : root.at("images")) {
        Scene scene;
        scene.mode = data.mode;
        scene.human_class_id = data.human_class_id;

        const auto& gt_boxes = img.at("gt_boxes");
        for (size_t i = 0; i < gt_boxes.size(); ++i) {
            const auto& e = gt_boxes[i];
            if (!e.is_array() || e.size() != 5) {
                throw AnnotationError(where(image_index, "gt_boxes", i) + ": expected 5 fields");
            }
            GtBox g;
            g.box = parse_box(e, where(image_index, "gt_boxes", i));
            g.class_id = e.at(4).get<int>();
            if (g.class_id < 0) {
                throw AnnotationError(where(image_index, "gt_boxes", i) + ": negative class id");
            }
            scene.ground_truth.boxes.push_back(g);
        }

        const int n_gt = static_cast<int>(scene.ground_truth.boxes.size());
        const auto& rels = img.at("gt_relationships");
        for (size_t i = 0; i < rels.size(); ++i) {
            const auto& e = rels[i];
            if (!e.is_array() || e.size() != 3) {
                throw AnnotationError(where(image_index, "gt_relationships", i) +
                                      ": expected [subject, object, predicate]");
            }
            Relationship r{e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<int>()};
            if (r.subject < 0 || r.subject >= n_gt) {
                throw AnnotationError(where(image_index, "gt_relationships", i) +
                                      ": subject index " + std::to_string(r.subject) +
                                      " out of range (" + std::to_string(n_gt) + " boxes)");
            }
            const bool invisible = r.object == kInvisibleObject;
            if (invisible && data.mode != SceneMode::Hoi) {
                throw AnnotationError(where(image_index, "gt_relationships", i) +
                                      ": invisible object only allowed in hoi mode");
            }
            if (!invisible && (r.object < 0 || r.object >= n_gt)) {
                throw AnnotationError(where(image_index, "gt_relationships", i) +
                                      ": object index " + std::to_string(r.object) +
                                      " out of range (" + std::to_string(n_gt) + " boxes)");
            }
            if (r.predicate < 0) {
                throw AnnotationError(where(image_index, "gt_relationships", i) +
                                      ": negative predicate");
            }
            scene.ground_truth.relationships.push_back(r);
        }

        const auto& dets = img.at("detections");
        for (size_t i = 0; i < dets.size(); ++i) {
            const auto& e = dets[i];
            if (!e.is_array() || e.size() != 6) {
                throw AnnotationError(where(image_index, "detections", i) + ": expected 6 fields");
            }
            Detection d;
            d.box = parse_box(e, where(image_index, "detections", i));
            d.class_id = e.at(4).get<int>();
            d.score = e.at(5).get<double>();
            if (d.class_id < 0) {
                throw AnnotationError(where(image_index, "detections", i) + ": negative class id");
            }
            if (!(d.score >= 0.0 && d.score <= 1.0)) {
                throw AnnotationError(where(image_index, "detections", i) +
                                      ": score outside [0,1]");
            }
            scene.detections.push_back(d);
        }

        data.scenes.push_back(std::move(scene));
        ++image_index;
    }
    return data;
}

MergeResult merge_boxes(const std::vector<GtBox>& boxes, double iou_threshold) {
    const size_t n = boxes.size();
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[static_cast<size_t>(x)] != x) {
            parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
            x = parent[static_cast<size_t>(x)];
        }
        return x;
    };
    auto unite = [&](int a, int b) { parent[static_cast<size_t>(find(a))] = find(b); };

    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            if (boxes[i].class_id != boxes[j].class_id) continue;
            if (iou(boxes[i].box, boxes[j].box) >= iou_threshold) {
                unite(static_cast<int>(i), static_cast<int>(j));
            }
        }
    }

    MergeResult out;
    out.index_map.assign(n, -1);
    std::vector<int> root_to_new(n, -1);
    for (size_t i = 0; i < n; ++i) {
        const int root = find(static_cast<int>(i));
        if (root_to_new[static_cast<size_t>(root)] < 0) {
            root_to_new[static_cast<size_t>(root)] = static_cast<int>(out.boxes.size());
            out.boxes.push_back(GtBox{Box{}, boxes[i].class_id});
        }
        out.index_map[i] = root_to_new[static_cast<size_t>(root)];
    }

    // representative of a component: coordinate mean of its members
    std::vector<int> counts(out.boxes.size(), 0);
    std::vector<Box> sums(out.boxes.size(), Box{0, 0, 0, 0});
    for (size_t i = 0; i < n; ++i) {
        const size_t m = static_cast<size_t>(out.index_map[i]);
        sums[m].x1 += boxes[i].box.x1;
        sums[m].y1 += boxes[i].box.y1;
        sums[m].x2 += boxes[i].box.x2;
        sums[m].y2 += boxes[i].box.y2;
        counts[m] += 1;
    }
    for (size_t m = 0; m < out.boxes.size(); ++m) {
        const double k = static_cast<double>(counts[m]);
        out.boxes[m].box = Box{sums[m].x1 / k, sums[m].y1 / k, sums[m].x2 / k, sums[m].y2 / k};
    }
    return out;
}

GroundTruth merge_ground_truth(const GroundTruth& gt, double iou_threshold) {
    const MergeResult merged = merge_boxes(gt.boxes, iou_threshold);
    GroundTruth out;
    out.boxes = merged.boxes;
    for (const Relationship& r : gt.relationships) {
        Relationship m = r;
        m.subject = merged.index_map[static_cast<size_t>(r.subject)];
        if (r.object != kInvisibleObject) {
            m.object = merged.index_map[static_cast<size_t>(r.object)];
        }
        out.relationships.push_back(m);
    }
    return out;
}

GroundTruth fill_invisible_objects(GroundTruth gt) {
    for (Relationship& r : gt.relationships) {
        if (r.object == kInvisibleObject) r.object = r.subject;
    }
    return gt;
}

int synthetic_predicate(int subject_class, int object_class, int num_predicates) {
    return (subject_class * 31 + object_class * 17 + 3) % num_predicates;
}

namespace {

void validate(const SyntheticConfig& c) {
    auto fail = [](const std::string& msg) {
        throw std::invalid_argument("generate_synthetic: " + msg);
    };
    if (c.scenes < 1) fail("scenes must be >= 1");
    if (c.objects_min < 1 || c.objects_max < c.objects_min) fail("bad objects range");
    if (c.relationships_min < 0 || c.relationships_max < c.relationships_min) {
        fail("bad relationships range");
    }
    if (c.relationships_min > 0 && c.objects_min < 2) {
        fail("relationships need at least 2 objects per scene");
    }
    if (c.jitter_sigma < 0.0) fail("jitter must be >= 0");
    if (c.drop_prob < 0.0 || c.drop_prob > 1.0) fail("drop_prob must lie in [0,1]");
    if (c.spurious_rate < 0.0 || c.spurious_rate > 1.0) fail("spurious_rate must lie in [0,1]");
    if (c.spurious_rate >= 0.95) fail("spurious_rate >= 0.95 is degenerate");
    if (c.top_k < 1) fail("top_k must be >= 1");
    if (c.num_classes < 2) fail("need at least 2 classes");
    if (c.num_predicates < 1) fail("need at least 1 predicate");
    if (c.width <= 0.0 || c.height <= 0.0) fail("frame must have positive extent");
}

Box random_box(CounterRng& rng, double width, double height) {
    const double side = std::min(width, height);
    const double w = rng.uniform(0.06, 0.20) * side;
    const double h = rng.uniform(0.06, 0.20) * side;
    const double x = rng.uniform(0.0, width - w);
    const double y = rng.uniform(0.0, height - h);
    return Box{x, y, x + w, y + h};
}

Box place_without_containment(CounterRng& rng, const std::vector<GtBox>& existing, double width,
                              double height) {
    for (int attempt = 0; attempt < 500; ++attempt) {
        const Box candidate = random_box(rng, width, height);
        const bool clash = std::any_of(existing.begin(), existing.end(), [&](const GtBox& g) {
            return contains(g.box, candidate) || contains(candidate, g.box);
        });
        if (!clash) return candidate;
    }
    return random_box(rng, width, height);
}

Box jittered(CounterRng& rng, const Box& b, double sigma, double width, double height) {
    const double w = b.width(), h = b.height();
    Box j{b.x1 + sigma * w * rng.normal(), b.y1 + sigma * h * rng.normal(),
          b.x2 + sigma * w * rng.normal(), b.y2 + sigma * h * rng.normal()};
    j.x1 = std::clamp(j.x1, 0.0, width);
    j.y1 = std::clamp(j.y1, 0.0, height);
    j.x2 = std::clamp(j.x2, 0.0, width);
    j.y2 = std::clamp(j.y2, 0.0, height);
    const double min_side = 1e-3 * std::min(width, height);
    if (j.x2 - j.x1 < min_side) {
        const double cx = 0.5 * (j.x1 + j.x2);
        j.x1 = std::max(0.0, cx - 0.5 * min_side);
        j.x2 = j.x1 + min_side;
    }
    if (j.y2 - j.y1 < min_side) {
        const double cy = 0.5 * (j.y1 + j.y2);
        j.y1 = std::max(0.0, cy - 0.5 * min_side);
        j.y2 = j.y1 + min_side;
    }
    return j;
}

}  // namespace

std::vector<Scene> generate_synthetic(const SyntheticConfig& config) {
    validate(config);

    std::vector<Scene> scenes;
    scenes.reserve(static_cast<size_t>(config.scenes));
    for (int s = 0; s < config.scenes; ++s) {
        CounterRng rng(hash_mix(config.seed, static_cast<std::uint64_t>(s), 0x5CE4EULL));
        Scene scene;
        scene.mode = config.mode;
        scene.human_class_id = config.mode == SceneMode::Hoi ? config.human_class_id : -1;

        const int n_obj = rng.uniform_int(config.objects_min, config.objects_max);
        const int subject_class =
            config.mode == SceneMode::Hoi ? config.human_class_id : 0;
        const int n_subjects = std::min(n_obj, std::max(2, n_obj / 6));
        for (int i = 0; i < n_obj; ++i) {
            GtBox g;
            g.box = place_without_containment(rng, scene.ground_truth.boxes, config.width,
                                              config.height);
            if (i < n_subjects) {
                g.class_id = subject_class;
            } else {
                g.class_id = (subject_class + 1 +
                              static_cast<int>(rng.below(
                                  static_cast<std::uint64_t>(config.num_classes - 1)))) %
                             config.num_classes;
            }
            scene.ground_truth.boxes.push_back(g);
        }

        // Relationships emanate from hub boxes of the subject class and reach
        // the objects within a fixed radius, nearest first. Relatedness is
        // therefore decodable from pair geometry and class, while boxes of
        // the subject class and objects just beyond the radius supply the
        // hard negatives.
        const int n_rel_budget =
            n_obj >= 2 ? rng.uniform_int(config.relationships_min, config.relationships_max) : 0;
        const int n_hubs = std::min(n_subjects, n_rel_budget > 3 ? 2 : 1);
        const double reach = 0.33 * std::min(config.width, config.height);
        std::vector<std::vector<std::pair<double, int>>> by_distance(
            static_cast<size_t>(n_hubs));
        for (int h = 0; h < n_hubs; ++h) {
            const Box& hb = scene.ground_truth.boxes[static_cast<size_t>(h)].box;
            for (int i = 0; i < n_obj; ++i) {
                if (i == h) continue;
                const Box& ob = scene.ground_truth.boxes[static_cast<size_t>(i)].box;
                by_distance[static_cast<size_t>(h)].push_back(
                    {std::hypot(ob.center_x() - hb.center_x(), ob.center_y() - hb.center_y()),
                     i});
            }
            std::sort(by_distance[static_cast<size_t>(h)].begin(),
                      by_distance[static_cast<size_t>(h)].end());
        }
        std::vector<size_t> cursor(static_cast<size_t>(n_hubs), 0);
        auto add_relationship = [&](bool within_reach_only) {
            for (int h = 0; h < n_hubs; ++h) {
                auto& list = by_distance[static_cast<size_t>(h)];
                size_t& at = cursor[static_cast<size_t>(h)];
                if (at >= list.size()) continue;
                if (within_reach_only && list[at].first > reach) continue;
                const int obj = list[at].second;
                ++at;
                const int cs = scene.ground_truth.boxes[static_cast<size_t>(h)].class_id;
                const int co = scene.ground_truth.boxes[static_cast<size_t>(obj)].class_id;
                scene.ground_truth.relationships.push_back(Relationship{
                    h, obj, synthetic_predicate(cs, co, config.num_predicates)});
                return true;
            }
            return false;
        };
        while (static_cast<int>(scene.ground_truth.relationships.size()) < n_rel_budget) {
            if (!add_relationship(true)) break;
        }
        while (static_cast<int>(scene.ground_truth.relationships.size()) <
               config.relationships_min) {
            if (!add_relationship(false)) break;
        }

        // detections: jittered ground truth, quality-correlated scores
        int n_true = 0;
        for (const GtBox& g : scene.ground_truth.boxes) {
            if (rng.uniform() < config.drop_prob) continue;
            Detection d;
            d.box = jittered(rng, g.box, config.jitter_sigma, config.width, config.height);
            d.class_id = g.class_id;
            const double quality = iou(d.box, g.box);
            d.score = std::clamp(0.30 + 0.65 * quality + 0.05 * rng.normal(), 0.02, 0.995);
            scene.detections.push_back(d);
            ++n_true;
        }

        // spurious detections, scored below the true-detection range
        const double target = static_cast<double>(n_true) * config.spurious_rate /
                              (1.0 - config.spurious_rate);
        int n_spurious = static_cast<int>(target);
        if (rng.uniform() < target - std::floor(target)) ++n_spurious;
        for (int i = 0; i < n_spurious; ++i) {
            Detection d;
            d.box = random_box(rng, config.width, config.height);
            d.class_id = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.num_classes)));
            d.score = rng.uniform(0.02, 0.40);
            scene.detections.push_back(d);
        }

        scenes.push_back(std::move(scene));
    }
    return scenes;
}

StatsReport stats_report(std::span<const Scene> scenes, int top_k, double iou_threshold,
                         int threads) {
    StatsReport report;
    report.per_scene.resize(scenes.size());

    auto work = [&](size_t begin, size_t end) {
        for (size_t i = begin; i < end; ++i) {
            report.per_scene[i] = distribution(scenes[i], top_k, iou_threshold);
        }
    };
    if (threads <= 1 || scenes.size() < 2) {
        work(0, scenes.size());
    } else {
        const size_t n_threads = std::min<size_t>(static_cast<size_t>(threads), scenes.size());
        std::vector<std::thread> pool;
        const size_t chunk = (scenes.size() + n_threads - 1) / n_threads;
        for (size_t t = 0; t < n_threads; ++t) {
            const size_t begin = t * chunk;
            const size_t end = std::min(scenes.size(), begin + chunk);
            if (begin < end) pool.emplace_back(work, begin, end);
        }
        for (std::thread& t : pool) t.join();
    }

    for (const ClassDistribution& d : report.per_scene) {
        for (size_t c = 0; c < kNumProposalClasses; ++c) report.aggregate.counts[c] += d.counts[c];
        report.aggregate.total += d.total;
        report.aggregate.d_pos += d.d_pos;
        report.aggregate.d_rel += d.d_rel;
    }
    if (report.aggregate.total > 0) {
        report.pos_fraction = static_cast<double>(report.aggregate.count(ProposalClass::Pos)) /
                              static_cast<double>(report.aggregate.total);
    }
    if (report.aggregate.d_pos > 0) {
        report.rel_over_pos = static_cast<double>(report.aggregate.d_rel) /
                              static_cast<double>(report.aggregate.d_pos);
    }
    return report;
}

nlohmann::json to_json(const ClassDistribution& dist) {
    nlohmann::json j;
    for (ProposalClass c : kAllProposalClasses) {
        j[to_string(c)] = dist.count(c);
    }
    j["total"] = dist.total;
    j["d_pos"] = dist.d_pos;
    j["d_rel"] = dist.d_rel;
    return j;
}

nlohmann::json to_json(const StatsReport& report) {
    nlohmann::json j;
    j["aggregate"] = to_json(report.aggregate);
    j["pos_fraction"] = report.pos_fraction;
    j["rel_over_pos"] = report.rel_over_pos;
    nlohmann::json per_scene = nlohmann::json::array();
    for (const ClassDistribution& d : report.per_scene) per_scene.push_back(to_json(d));
    j["per_scene"] = std::move(per_scene);
    return j;
}

namespace {

nlohmann::json box_json(const Box& b) { return {b.x1, b.y1, b.x2, b.y2}; }

}  // namespace

void write_predictions_jsonl(const std::string& path,
                             std::span<const std::vector<TripletPrediction>> per_image,
                             const nlohmann::json& config) {
    std::ofstream os(path);
    if (!os) throw AnnotationError("cannot open " + path + " for writing");
    nlohmann::json header;
    header["schema"] = kPredictionSchema;
    header["version"] = kPredictionVersion;
    header["config"] = config;
    os << header.dump() << "\n";
    for (size_t img = 0; img < per_image.size(); ++img) {
        for (const TripletPrediction& p : per_image[img]) {
            nlohmann::json j;
            j["image"] = img;
            j["subject_box"] = box_json(p.subject_box);
            j["object_box"] = box_json(p.object_box);
            j["subject_class"] = p.subject_class;
            j["object_class"] = p.object_class;
            j["predicate"] = p.predicate;
            j["score"] = p.score;
            j["s1"] = p.s1;
            j["s2"] = p.s2;
            j["s_cls"] = p.s_cls;
            os << j.dump() << "\n";
        }
    }
    if (!os) throw AnnotationError("write failed for " + path);
}

std::vector<std::vector<TripletPrediction>> read_predictions_jsonl(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw AnnotationError("cannot open " + path);
    std::vector<std::vector<TripletPrediction>> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw AnnotationError(path + ":" + std::to_string(line_no) + ": invalid JSON: " +
                                  e.what());
        }
        if (j.contains("schema")) {
            if (j["schema"] != kPredictionSchema) {
                throw AnnotationError(path + ": not a prediction file (schema mismatch)");
            }
            continue;
        }
        const size_t img = j.at("image").get<size_t>();
        if (out.size() <= img) out.resize(img + 1);
        TripletPrediction p;
        const auto& sb = j.at("subject_box");
        const auto& ob = j.at("object_box");
        p.subject_box = Box{sb.at(0), sb.at(1), sb.at(2), sb.at(3)};
        p.object_box = Box{ob.at(0), ob.at(1), ob.at(2), ob.at(3)};
        p.subject_class = j.at("subject_class").get<int>();
        p.object_class = j.at("object_class").get<int>();
        p.predicate = j.at("predicate").get<int>();
        p.score = j.at("score").get<double>();
        p.s1 = j.at("s1").get<double>();
        p.s2 = j.at("s2").get<double>();
        p.s_cls = j.at("s_cls").get<double>();
        out[img].push_back(p);
    }
    return out;
}

}  // namespace vrd
