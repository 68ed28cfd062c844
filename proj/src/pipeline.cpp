#include "vrdlab/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace vrd {

namespace {

constexpr const char* kMetaKeys[] = {"feature_dim", "heads", "head_dim", "message_hidden",
                                     "classifier_hidden", "smd_hidden", "num_predicates",
                                     "mask_size"};

int classifier_in_dim(const ModelConfig& c) { return 3 * c.feature_dim; }

// leaky encoders keep every feature unit alive; a hard rectifier here can
// zero out entire node vectors and starve the attention layer
constexpr double kEncoderSlope = 0.1;

}  // namespace

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
    if (config.feature_dim < 1 || config.num_predicates < 1 || config.mask_size < 1) {
        throw std::invalid_argument("ModelParams::init: invalid configuration");
    }
    CounterRng rng(hash_mix(seed, 0x10DE1ULL));
    ModelParams m;
    m.config = config;
    m.node_encoder = LinearLayer::init(config.feature_dim, config.feature_dim, rng);
    m.edge_encoder = LinearLayer::init(config.feature_dim, config.feature_dim, rng);
    m.gat = MhgatParams::init(config.feature_dim, config.feature_dim, config.heads,
                              config.head_dim, config.message_hidden, rng);
    m.classifier[0] = LinearLayer::init(config.classifier_hidden, classifier_in_dim(config), rng);
    m.classifier[1] = LinearLayer::init(config.classifier_hidden, config.classifier_hidden, rng);
    m.classifier[2] = LinearLayer::init(config.num_predicates, config.classifier_hidden, rng);
    m.smd = SmdHead::init(classifier_in_dim(config), config.smd_hidden, config.mask_size, rng);
    return m;
}

std::vector<std::pair<std::string, Tensor*>> ModelParams::named_parameters() {
    std::vector<std::pair<std::string, Tensor*>> out;
    auto layer = [&out](const std::string& name, LinearLayer& l) {
        out.emplace_back(name + ".weight", &l.weight);
        out.emplace_back(name + ".bias", &l.bias);
    };
    layer("node_encoder", node_encoder);
    layer("edge_encoder", edge_encoder);
    for (size_t h = 0; h < gat.heads.size(); ++h) {
        const std::string base = "gat.head" + std::to_string(h);
        layer(base + ".source", gat.heads[h].source);
        layer(base + ".target", gat.heads[h].target);
        layer(base + ".edge", gat.heads[h].edge);
        out.emplace_back(base + ".scoring", &gat.heads[h].scoring);
    }
    layer("gat.message_hidden", gat.message_hidden);
    layer("gat.message_out", gat.message_out);
    for (size_t i = 0; i < classifier.size(); ++i) {
        layer("classifier." + std::to_string(i), classifier[i]);
    }
    layer("smd.hidden", smd.hidden);
    layer("smd.out", smd.out);
    return out;
}

std::vector<Tensor*> ModelParams::parameter_list() {
    std::vector<Tensor*> out;
    for (auto& [name, t] : named_parameters()) out.push_back(t);
    return out;
}

Checkpoint ModelParams::to_checkpoint() const {
    Checkpoint ckpt;
    auto& self = const_cast<ModelParams&>(*this);
    for (auto& [name, t] : self.named_parameters()) ckpt.tensors.emplace_back(name, *t);
    const int meta_values[] = {config.feature_dim,       config.heads,
                               config.head_dim,          config.message_hidden,
                               config.classifier_hidden, config.smd_hidden,
                               config.num_predicates,    config.mask_size};
    for (size_t i = 0; i < std::size(kMetaKeys); ++i) {
        ckpt.metadata[kMetaKeys[i]] = std::to_string(meta_values[i]);
    }
    ckpt.metadata["iou_threshold"] = std::to_string(config.iou_threshold);
    ckpt.metadata["feature_seed"] = std::to_string(config.feature_seed);
    return ckpt;
}

ModelParams ModelParams::from_checkpoint(const Checkpoint& ckpt) {
    ModelConfig config;
    config.feature_dim = std::stoi(ckpt.meta("feature_dim"));
    config.heads = std::stoi(ckpt.meta("heads"));
    config.head_dim = std::stoi(ckpt.meta("head_dim"));
    config.message_hidden = std::stoi(ckpt.meta("message_hidden"));
    config.classifier_hidden = std::stoi(ckpt.meta("classifier_hidden"));
    config.smd_hidden = std::stoi(ckpt.meta("smd_hidden"));
    config.num_predicates = std::stoi(ckpt.meta("num_predicates"));
    config.mask_size = std::stoi(ckpt.meta("mask_size"));
    config.iou_threshold = std::stod(ckpt.meta("iou_threshold"));
    config.feature_seed = std::stoull(ckpt.meta("feature_seed"));

    ModelParams m = ModelParams::init(config, 0);
    for (auto& [name, t] : m.named_parameters()) {
        const Tensor& stored = ckpt.tensor(name);
        require_same_shape(*t, stored, "ModelParams::from_checkpoint");
        *t = stored;
    }
    return m;
}

ProposalTargets make_targets(const Scene& scene, const ProposalClassifier& classifier,
                             const ProposalPair& pair, const ModelConfig& config) {
    ProposalTargets t;
    t.predicates = Tensor({config.num_predicates});
    for (int rel : classifier.matched_relationships(pair)) {
        const int p = scene.ground_truth.relationships[static_cast<size_t>(rel)].predicate;
        if (p < 0 || p >= config.num_predicates) {
            throw std::invalid_argument("make_targets: predicate " + std::to_string(p) +
                                        " outside the model vocabulary");
        }
        t.predicates[p] = 1.0;
    }
    t.mask = mask_target(scene.detections[static_cast<size_t>(pair.subject)].box,
                         scene.detections[static_cast<size_t>(pair.object)].box, config.mask_size);
    return t;
}

namespace {

std::vector<int> slots_for(const Scene& scene, std::span<const int> kept) {
    std::vector<int> slot_of(scene.detections.size(), -1);
    for (size_t s = 0; s < kept.size(); ++s) slot_of[static_cast<size_t>(kept[s])] = static_cast<int>(s);
    return slot_of;
}

}  // namespace

SceneForward::SceneForward(ModelParams& model, const Scene& scene, const ProposalSet& proposals,
                           std::span<const int> batch)
    : binder_(graph_), mask_size_(model.config.mask_size) {
    const RelationshipFeatures features =
        extract_toy_features(scene, proposals, model.config.feature_dim, model.config.feature_seed);
    const int n = static_cast<int>(features.kept.size());
    if (n == 0) throw std::invalid_argument("SceneForward: scene has no detections");

    const BoundLinear node_enc = binder_.linear(model.node_encoder);
    const BoundLinear edge_enc = binder_.linear(model.edge_encoder);
    const BoundMhgat gat = bind_mhgat(binder_, model.gat);
    BoundLinear cls[3];
    for (int i = 0; i < 3; ++i) cls[i] = binder_.linear(model.classifier[static_cast<size_t>(i)]);
    const BoundSmdHead smd = bind_smd(binder_, model.smd);

    std::vector<NodeId> encoded_nodes(static_cast<size_t>(n));
    std::vector<std::vector<NodeId>> encoded_edges(static_cast<size_t>(n),
                                                   std::vector<NodeId>(static_cast<size_t>(n)));
    for (int i = 0; i < n; ++i) {
        const NodeId raw = graph_.input(features.graph.node(i));
        encoded_nodes[static_cast<size_t>(i)] =
            graph_.leaky_relu(binder_.apply(node_enc, raw), kEncoderSlope);
        for (int j = 0; j < n; ++j) {
            const NodeId raw_edge = graph_.input(features.graph.edge(i, j));
            encoded_edges[static_cast<size_t>(i)][static_cast<size_t>(j)] =
                graph_.leaky_relu(binder_.apply(edge_enc, raw_edge), kEncoderSlope);
        }
    }

    const MhgatTape gat_tape = build_mhgat(graph_, gat, encoded_nodes, encoded_edges);

    const std::vector<int> slot_of = slots_for(scene, features.kept);
    for (int idx : batch) {
        const ProposalPair& pair = proposals.pairs[static_cast<size_t>(idx)];
        const int si = slot_of[static_cast<size_t>(pair.subject)];
        const int oi = slot_of[static_cast<size_t>(pair.object)];
        if (si < 0 || oi < 0) throw std::invalid_argument("SceneForward: proposal outside top-k");
        const NodeId parts[] = {gat_tape.outputs[static_cast<size_t>(si)],
                                gat_tape.outputs[static_cast<size_t>(oi)],
                                encoded_edges[static_cast<size_t>(si)][static_cast<size_t>(oi)]};
        const NodeId z = graph_.concat(parts);
        NodeId h = graph_.relu(graph_.linear(z, cls[0].weight, cls[0].bias));
        h = graph_.relu(graph_.linear(h, cls[1].weight, cls[1].bias));
        predicate_probs_.push_back(graph_.sigmoid(graph_.linear(h, cls[2].weight, cls[2].bias)));
        mask_probs_.push_back(build_smd(graph_, smd, z));
    }
}

Tensor SceneForward::predicate_probabilities(int k) const {
    return graph_.value(predicate_probs_[static_cast<size_t>(k)]);
}

Tensor SceneForward::mask_probabilities(int k) const {
    const Tensor& flat = graph_.value(mask_probs_[static_cast<size_t>(k)]);
    return Tensor({2, mask_size_, mask_size_},
                  std::vector<double>(flat.data(), flat.data() + flat.size()));
}

SceneForward::LossBreakdown SceneForward::add_loss(std::span<const ProposalTargets> targets,
                                                   LossKind kind, double focal_alpha,
                                                   double focal_gamma) {
    if (static_cast<int>(targets.size()) != batch_size()) {
        throw std::invalid_argument("SceneForward::add_loss: target count mismatch");
    }
    std::vector<double> cls_targets;
    std::vector<double> mask_targets;
    for (const ProposalTargets& t : targets) {
        cls_targets.insert(cls_targets.end(), t.predicates.data(),
                           t.predicates.data() + t.predicates.size());
        mask_targets.insert(mask_targets.end(), t.mask.grid.data(),
                            t.mask.grid.data() + t.mask.grid.size());
    }
    const NodeId all_cls = graph_.concat(predicate_probs_);
    const NodeId all_mask = graph_.concat(mask_probs_);

    const NodeId cls_loss =
        kind == LossKind::Bce
            ? graph_.bce_mean(all_cls, Tensor::vector(std::move(cls_targets)))
            : graph_.focal_mean(all_cls, Tensor::vector(std::move(cls_targets)), focal_alpha,
                                focal_gamma);
    const NodeId mask_loss = graph_.bce_mean(all_mask, Tensor::vector(std::move(mask_targets)));
    total_loss_ = graph_.add(cls_loss, mask_loss);

    LossBreakdown out;
    out.classification = graph_.value(cls_loss).item();
    out.mask = graph_.value(mask_loss).item();
    out.total = graph_.value(total_loss_).item();
    return out;
}

void SceneForward::backward() {
    if (total_loss_ == kNoNode) throw std::logic_error("SceneForward::backward before add_loss");
    graph_.backward(total_loss_);
}

EagerEvaluator::EagerEvaluator(const ModelParams& model, const Scene& scene,
                               const ProposalSet& proposals)
    : model_(&model) {
    const RelationshipFeatures features =
        extract_toy_features(scene, proposals, model.config.feature_dim, model.config.feature_seed);
    const int n = static_cast<int>(features.kept.size());
    if (n == 0) throw std::invalid_argument("EagerEvaluator: scene has no detections");

    slot_of_ = slots_for(scene, features.kept);

    const int d = model.config.feature_dim;
    encoded_.nodes = Tensor({n, d});
    encoded_.edges = Tensor({n, n, d});
    for (int i = 0; i < n; ++i) {
        const Tensor xi = leaky_relu(model.node_encoder.apply(features.graph.node(i)), kEncoderSlope);
        for (int k = 0; k < d; ++k) encoded_.nodes.at(i, k) = xi[k];
        for (int j = 0; j < n; ++j) {
            const Tensor e =
                leaky_relu(model.edge_encoder.apply(features.graph.edge(i, j)), kEncoderSlope);
            for (int k = 0; k < d; ++k) encoded_.edges.at(i, j, k) = e[k];
        }
    }
    updated_ = message_pass(model.gat, encoded_);
}

Tensor EagerEvaluator::relationship_feature(const ProposalPair& pair) const {
    const int si = slot_of_[static_cast<size_t>(pair.subject)];
    const int oi = slot_of_[static_cast<size_t>(pair.object)];
    if (si < 0 || oi < 0) throw std::invalid_argument("EagerEvaluator: proposal outside top-k");
    const int d = model_->config.feature_dim;
    Tensor z({3 * d});
    for (int k = 0; k < d; ++k) {
        z[k] = updated_.at(si, k);
        z[d + k] = updated_.at(oi, k);
        z[2 * d + k] = encoded_.edges.at(si, oi, k);
    }
    return z;
}

Tensor EagerEvaluator::predicate_probabilities(const ProposalPair& pair) const {
    Tensor h = relationship_feature(pair);
    h = relu(model_->classifier[0].apply(h));
    h = relu(model_->classifier[1].apply(h));
    return sigmoid(model_->classifier[2].apply(h));
}

Tensor EagerEvaluator::mask_probabilities(const ProposalPair& pair) const {
    return predict_mask(model_->smd, relationship_feature(pair));
}

std::vector<TripletPrediction> infer(const ModelParams& model, const Scene& scene,
                                     const InferConfig& config) {
    const ProposalSet set = generate_proposals(scene, config.top_k);
    if (set.pairs.empty()) return {};

    const EagerEvaluator eval(model, scene, set);
    const int keep = std::min(config.predicate_top_k, model.config.num_predicates);

    std::vector<TripletPrediction> out;
    out.reserve(set.pairs.size() * static_cast<size_t>(keep));
    std::vector<int> order(static_cast<size_t>(model.config.num_predicates));
    for (const ProposalPair& pair : set.pairs) {
        const Tensor probs = eval.predicate_probabilities(pair);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return probs[a] > probs[b]; });
        const Detection& sub = scene.detections[static_cast<size_t>(pair.subject)];
        const Detection& obj = scene.detections[static_cast<size_t>(pair.object)];
        for (int k = 0; k < keep; ++k) {
            TripletPrediction p;
            p.subject_box = sub.box;
            p.object_box = obj.box;
            p.subject_class = sub.class_id;
            p.object_class = obj.class_id;
            p.predicate = order[static_cast<size_t>(k)];
            p.s1 = sub.score;
            p.s2 = obj.score;
            p.s_cls = probs[p.predicate];
            p.score = p.s1 * p.s2 * p.s_cls;
            out.push_back(p);
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const TripletPrediction& a, const TripletPrediction& b) {
                         return a.score > b.score;
                     });
    return out;
}

std::vector<int> TrainConfig::resolved_decay_epochs() const {
    if (decay_epochs.has_value()) return *decay_epochs;
    std::vector<int> out;
    for (double frac : {0.68, 0.92}) {
        const int e = static_cast<int>(frac * epochs);
        if (e >= 1 && e < epochs && (out.empty() || out.back() != e)) out.push_back(e);
    }
    return out;
}

namespace {

// Per-proposal classification loss used by hard-example mining.
std::vector<double> per_proposal_losses(const ModelParams& model, const Scene& scene,
                                        const ProposalSet& set, const ProposalClassifier& cls,
                                        const TrainConfig& config) {
    const EagerEvaluator eval(model, scene, set);
    std::vector<double> losses;
    losses.reserve(set.pairs.size());
    for (const ProposalPair& pair : set.pairs) {
        const ProposalTargets t = make_targets(scene, cls, pair, model.config);
        const Tensor probs = eval.predicate_probabilities(pair);
        losses.push_back(config.loss == LossKind::Bce
                             ? bce_loss(probs, t.predicates)
                             : focal_loss_mean(probs, t.predicates, config.focal_alpha,
                                               config.focal_gamma));
    }
    return losses;
}

}  // namespace

TrainResult train(ModelParams& model, std::span<const Scene> scenes, const TrainConfig& config) {
    TrainResult result;

    OptimizerState opt;
    opt.learning_rate = config.learning_rate;
    opt.momentum = config.momentum;
    opt.decay_rate = config.decay_rate;
    opt.decay_epochs = config.resolved_decay_epochs();
    const std::vector<Tensor*> params = model.parameter_list();
    opt.attach(params);

    // classification and weights depend only on scene geometry; do them once
    struct ScenePlan {
        ProposalSet set;
        std::vector<ProposalClass> classes;
        std::optional<WeightAssignment> weights;
        bool usable = false;
    };
    std::vector<ScenePlan> plans;
    std::vector<std::optional<ProposalClassifier>> classifiers;
    plans.reserve(scenes.size());
    for (const Scene& scene : scenes) {
        ScenePlan plan;
        plan.set = generate_proposals(scene, config.top_k);
        classifiers.emplace_back();
        if (!plan.set.pairs.empty()) {
            classifiers.back().emplace(scene, model.config.iou_threshold);
            const ProposalClassifier& cls = *classifiers.back();
            plan.classes.reserve(plan.set.pairs.size());
            ClassDistribution dist;
            dist.total = static_cast<std::int64_t>(plan.set.pairs.size());
            for (const ProposalPair& p : plan.set.pairs) {
                plan.classes.push_back(cls.classify(p));
                dist.counts[static_cast<size_t>(plan.classes.back())] += 1;
            }
            if (dist.count(ProposalClass::Pos) > 0) {
                plan.usable = true;
                if (config.sampler.strategy != SamplerStrategy::Ohem) {
                    plan.weights = assign_weights(dist, plan.classes, config.sampler.strategy,
                                                  config.sampler.positive_ratio);
                }
            }
        }
        if (!plan.usable) result.skipped_scenes += 1;
        plans.push_back(std::move(plan));
    }

    std::vector<const Tensor*> grad_ptrs;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        opt.start_epoch(epoch);
        for (size_t s = 0; s < scenes.size(); ++s) {
            const ScenePlan& plan = plans[s];
            if (!plan.usable) continue;
            const Scene& scene = scenes[s];
            const ProposalClassifier& cls = *classifiers[s];

            std::vector<int> batch;
            if (config.sampler.strategy == SamplerStrategy::Ohem) {
                const std::vector<double> losses =
                    per_proposal_losses(model, scene, plan.set, cls, config);
                batch = ohem_select(plan.classes, losses, config.sampler.batch_size,
                                    config.sampler.positive_ratio);
            } else {
                // batch draw is fixed per (run seed, scene): with the model
                // frozen, revisiting a scene reproduces its loss exactly
                SamplerConfig draw = config.sampler;
                draw.seed = hash_mix(config.seed, static_cast<std::uint64_t>(s));
                batch = sample_batch(*plan.weights, draw);
            }

            std::vector<ProposalTargets> targets;
            targets.reserve(batch.size());
            for (int idx : batch) {
                targets.push_back(
                    make_targets(scene, cls, plan.set.pairs[static_cast<size_t>(idx)], model.config));
            }

            SceneForward fwd(model, scene, plan.set, batch);
            const auto loss =
                fwd.add_loss(targets, config.loss, config.focal_alpha, config.focal_gamma);
            fwd.backward();

            std::vector<Tensor> grads;
            grads.reserve(fwd.parameter_count());
            for (size_t k = 0; k < fwd.parameter_count(); ++k) grads.push_back(fwd.gradient(k));
            optimizer_step(params, grads, opt);

            result.loss_trace.push_back(loss.total);
        }
    }
    return result;
}

double FalsePositiveReport::hard_negative_mean() const {
    return mean_per_image[static_cast<size_t>(ProposalClass::Neg3)] +
           mean_per_image[static_cast<size_t>(ProposalClass::Neg4)] +
           mean_per_image[static_cast<size_t>(ProposalClass::Neg5)];
}

FalsePositiveReport false_positive_report(const ModelParams& model,
                                          std::span<const Scene> scenes, double threshold,
                                          int top_k) {
    if (threshold <= 0.0 || threshold >= 1.0) {
        throw std::invalid_argument("false_positive_report: threshold must lie in (0,1)");
    }
    FalsePositiveReport report;
    for (const Scene& scene : scenes) {
        report.scenes += 1;
        const ProposalSet set = generate_proposals(scene, top_k);
        if (set.pairs.empty()) continue;
        const ProposalClassifier cls(scene, model.config.iou_threshold);
        const EagerEvaluator eval(model, scene, set);
        for (const ProposalPair& pair : set.pairs) {
            const ProposalClass c = cls.classify(pair);
            if (c == ProposalClass::Pos) continue;
            const Tensor probs = eval.predicate_probabilities(pair);
            const double top = *std::max_element(probs.data(), probs.data() + probs.size());
            if (top >= threshold) report.totals[static_cast<size_t>(c)] += 1;
        }
    }
    if (report.scenes > 0) {
        for (size_t c = 0; c < kNumProposalClasses; ++c) {
            report.mean_per_image[c] =
                static_cast<double>(report.totals[c]) / static_cast<double>(report.scenes);
        }
    }
    return report;
}

}  // namespace vrd
