// vrdlab: synthetic scene generation, proposal statistics, balanced-sampling
// demos, toy relationship training, inference, and metric evaluation.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <thread>

#include "vrdlab/data_io.hpp"
#include "vrdlab/evaluation.hpp"
#include "vrdlab/pipeline.hpp"

using nlohmann::json;
using namespace vrd;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

void echo_config(const json& config) { std::cout << "config: " << config.dump() << "\n"; }

void write_json(const std::string& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw AnnotationError("cannot open " + path + " for writing");
    os << j.dump(2) << "\n";
    if (!os) throw AnnotationError("write failed for " + path);
}

AnnotationData load_scenes(const std::string& path) {
    AnnotationData data = load_annotations(path);
    if (data.mode == SceneMode::Hoi) {
        for (Scene& scene : data.scenes) {
            scene.ground_truth = fill_invisible_objects(std::move(scene.ground_truth));
        }
    }
    return data;
}

template <typename Fn>
void parallel_scenes(size_t count, int threads, Fn fn) {
    if (threads <= 1 || count < 2) {
        for (size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const size_t n_threads = std::min<size_t>(static_cast<size_t>(threads), count);
    const size_t chunk = (count + n_threads - 1) / n_threads;
    std::vector<std::thread> pool;
    for (size_t t = 0; t < n_threads; ++t) {
        const size_t begin = t * chunk;
        const size_t end = std::min(count, begin + chunk);
        if (begin < end) {
            pool.emplace_back([begin, end, &fn] {
                for (size_t i = begin; i < end; ++i) fn(i);
            });
        }
    }
    for (std::thread& t : pool) t.join();
}

struct GenOptions {
    SyntheticConfig synth;
    std::string mode = "general";
    std::string out;
};

int run_gen(const GenOptions& opt) {
    SyntheticConfig config = opt.synth;
    config.mode = opt.mode == "hoi" ? SceneMode::Hoi : SceneMode::General;

    const json resolved = {
        {"command", "gen"},
        {"scenes", config.scenes},
        {"objects", {config.objects_min, config.objects_max}},
        {"relationships", {config.relationships_min, config.relationships_max}},
        {"jitter", config.jitter_sigma},
        {"drop_prob", config.drop_prob},
        {"spurious_rate", config.spurious_rate},
        {"top_k", config.top_k},
        {"classes", config.num_classes},
        {"predicates", config.num_predicates},
        {"mode", opt.mode},
        {"human_class_id", config.human_class_id},
        {"frame", {config.width, config.height}},
        {"seed", config.seed},
        {"out", opt.out},
    };
    echo_config(resolved);

    AnnotationData data;
    data.mode = config.mode;
    data.human_class_id = config.mode == SceneMode::Hoi ? config.human_class_id : -1;
    data.scenes = generate_synthetic(config);
    data.config = resolved;
    save_annotations(opt.out, data);
    std::cout << "wrote " << data.scenes.size() << " scenes to " << opt.out << "\n";
    return kExitOk;
}

struct StatsOptions {
    std::string in;
    std::string out;
    std::string csv;
    int top_k = 100;
    int threads = 1;
};

int run_stats(const StatsOptions& opt) {
    const json resolved = {{"command", "stats"},
                           {"in", opt.in},
                           {"top_k", opt.top_k},
                           {"threads", opt.threads},
                           {"out", opt.out},
                           {"csv", opt.csv}};
    echo_config(resolved);

    const AnnotationData data = load_scenes(opt.in);
    const StatsReport report =
        stats_report(data.scenes, opt.top_k, kDefaultIouThreshold, opt.threads);
    json artifact = {{"schema", "vrdlab-stats"}, {"version", 1}, {"config", resolved}};
    artifact.update(to_json(report));
    write_json(opt.out, artifact);

    if (!opt.csv.empty()) {
        std::ofstream os(opt.csv);
        if (!os) throw AnnotationError("cannot open " + opt.csv + " for writing");
        os << "class,count\n";
        for (ProposalClass c : kAllProposalClasses) {
            os << to_string(c) << "," << report.aggregate.count(c) << "\n";
        }
    }
    std::cout << "proposals " << report.aggregate.total << ", positive fraction "
              << report.pos_fraction << ", d_rel/d_pos " << report.rel_over_pos << "\n";
    return kExitOk;
}

struct ClassifyOptions {
    std::string in;
    std::string out;
    std::string masks;  // optional mask-target inspection dump
    int top_k = 100;
    int lp = 7;
};

json mask_grid_json(const MaskTarget& target) {
    json channels = json::array();
    for (int ch = 0; ch < 2; ++ch) {
        json rows = json::array();
        for (int r = 0; r < target.side(); ++r) {
            json row = json::array();
            for (int c = 0; c < target.side(); ++c) {
                row.push_back(target.on(ch, r, c) ? 1 : 0);
            }
            rows.push_back(std::move(row));
        }
        channels.push_back(std::move(rows));
    }
    return channels;
}

int run_classify(const ClassifyOptions& opt) {
    const json resolved = {{"command", "classify"}, {"in", opt.in},   {"top_k", opt.top_k},
                           {"lp", opt.lp},          {"out", opt.out}, {"masks", opt.masks}};
    echo_config(resolved);

    const AnnotationData data = load_scenes(opt.in);
    json scenes = json::array();
    json mask_scenes = json::array();
    for (const Scene& scene : data.scenes) {
        const ProposalSet set = generate_proposals(scene, opt.top_k);
        const ProposalClassifier cls(scene);
        json rows = json::array();
        json mask_rows = json::array();
        for (const ProposalPair& p : set.pairs) {
            rows.push_back({{"subject", p.subject},
                            {"object", p.object},
                            {"class", to_string(cls.classify(p))}});
            if (!opt.masks.empty()) {
                const MaskTarget target =
                    mask_target(scene.detections[static_cast<size_t>(p.subject)].box,
                                scene.detections[static_cast<size_t>(p.object)].box, opt.lp);
                mask_rows.push_back({{"subject", p.subject},
                                     {"object", p.object},
                                     {"grid", mask_grid_json(target)}});
            }
        }
        scenes.push_back(std::move(rows));
        if (!opt.masks.empty()) mask_scenes.push_back(std::move(mask_rows));
    }
    write_json(opt.out, json{{"schema", "vrdlab-classes"},
                             {"version", 1},
                             {"config", resolved},
                             {"scenes", std::move(scenes)}});
    if (!opt.masks.empty()) {
        write_json(opt.masks, json{{"schema", "vrdlab-masks"},
                                   {"version", 1},
                                   {"config", resolved},
                                   {"scenes", std::move(mask_scenes)}});
    }
    return kExitOk;
}

struct SampleOptions {
    std::string in;
    std::string out;
    std::string strategy = "bnps";
    int scene = 0;
    int top_k = 100;
    int batch_size = 64;
    double pos_ratio = 0.25;
    std::uint64_t seed = 0;
    long draws = 0;
};

int run_sample(const SampleOptions& opt) {
    const json resolved = {{"command", "sample"},       {"in", opt.in},
                           {"scene", opt.scene},        {"strategy", opt.strategy},
                           {"top_k", opt.top_k},        {"batch_size", opt.batch_size},
                           {"pos_ratio", opt.pos_ratio}, {"seed", opt.seed},
                           {"draws", opt.draws},        {"out", opt.out}};
    echo_config(resolved);

    const AnnotationData data = load_scenes(opt.in);
    if (opt.scene < 0 || static_cast<size_t>(opt.scene) >= data.scenes.size()) {
        throw AnnotationError("scene index " + std::to_string(opt.scene) + " out of range (" +
                              std::to_string(data.scenes.size()) + " scenes)");
    }
    const Scene& scene = data.scenes[static_cast<size_t>(opt.scene)];
    const SamplerStrategy strategy = sampler_strategy_from_string(opt.strategy);

    const ProposalSet set = generate_proposals(scene, opt.top_k);
    const ProposalClassifier cls(scene);
    std::vector<ProposalClass> classes;
    ClassDistribution dist;
    dist.total = static_cast<std::int64_t>(set.pairs.size());
    for (const ProposalPair& p : set.pairs) {
        classes.push_back(cls.classify(p));
        dist.counts[static_cast<size_t>(classes.back())] += 1;
    }
    const WeightAssignment weights = assign_weights(dist, classes, strategy, opt.pos_ratio);

    SamplerConfig config;
    config.strategy = strategy;
    config.batch_size = opt.batch_size;
    config.positive_ratio = opt.pos_ratio;
    config.seed = opt.seed;
    const std::vector<int> batch = sample_batch(weights, config);

    json artifact = {{"schema", "vrdlab-sample"}, {"version", 1}, {"config", resolved}};
    artifact["distribution"] = to_json(dist);
    json batch_rows = json::array();
    for (int idx : batch) {
        batch_rows.push_back({{"proposal", idx},
                              {"subject", set.pairs[static_cast<size_t>(idx)].subject},
                              {"object", set.pairs[static_cast<size_t>(idx)].object},
                              {"class", to_string(classes[static_cast<size_t>(idx)])}});
    }
    artifact["batch"] = std::move(batch_rows);

    json groups = json::array();
    for (const WeightGroup& g : weights.groups) {
        groups.push_back({{"mass", g.mass}, {"members", g.members.size()}});
    }
    artifact["groups"] = std::move(groups);

    if (opt.draws > 0) {
        SamplerConfig mc = config;
        mc.batch_size = static_cast<int>(opt.draws);
        const std::vector<int> sampled = sample_batch(weights, mc);

        std::vector<int> group_of(classes.size(), -1);
        for (size_t g = 0; g < weights.groups.size(); ++g) {
            for (int member : weights.groups[g].members) {
                group_of[static_cast<size_t>(member)] = static_cast<int>(g);
            }
        }
        std::vector<std::int64_t> group_counts(weights.groups.size(), 0);
        std::array<std::int64_t, kNumProposalClasses> class_counts{};
        for (int idx : sampled) {
            group_counts[static_cast<size_t>(group_of[static_cast<size_t>(idx)])] += 1;
            class_counts[static_cast<size_t>(classes[static_cast<size_t>(idx)])] += 1;
        }

        double chi2 = 0.0;
        for (size_t g = 0; g < weights.groups.size(); ++g) {
            const double expected =
                weights.groups[g].mass * static_cast<double>(opt.draws);
            const double diff = static_cast<double>(group_counts[g]) - expected;
            chi2 += diff * diff / expected;
        }
        json freq;
        for (ProposalClass c : kAllProposalClasses) {
            freq[to_string(c)] = static_cast<double>(class_counts[static_cast<size_t>(c)]) /
                                 static_cast<double>(opt.draws);
        }
        artifact["frequencies"] = std::move(freq);
        const int dof = static_cast<int>(weights.groups.size()) - 1;
        artifact["chi_square_p"] = dof >= 1 ? chi_square_p_value(chi2, dof) : 1.0;
    }

    write_json(opt.out, artifact);
    return kExitOk;
}

struct TrainOptions {
    std::string in;
    std::string out;
    std::string trace;
    std::string strategy = "bnps";
    std::string loss = "bce";
    int batch_size = 64;
    double pos_ratio = 0.25;
    int epochs = 2;
    double lr = 0.05;
    double focal_gamma = 2.0;
    double focal_alpha = 0.25;
    int top_k = 100;
    int lp = 7;
    int heads = 4;
    int feature_dim = 32;
    std::uint64_t seed = 0;
};

ModelConfig model_config_for(const TrainOptions& opt, int num_predicates) {
    ModelConfig mc;
    mc.feature_dim = opt.feature_dim;
    mc.heads = opt.heads;
    mc.head_dim = std::max(1, opt.feature_dim / opt.heads);
    mc.message_hidden = opt.feature_dim;
    mc.classifier_hidden = std::max(16, 3 * opt.feature_dim / 2);
    mc.smd_hidden = std::max(16, 3 * opt.feature_dim / 2);
    mc.num_predicates = num_predicates;
    mc.mask_size = opt.lp;
    mc.feature_seed = opt.seed;
    return mc;
}

int run_train(const TrainOptions& opt) {
    const json resolved = {{"command", "train"},            {"in", opt.in},
                           {"strategy", opt.strategy},      {"loss", opt.loss},
                           {"batch_size", opt.batch_size},  {"pos_ratio", opt.pos_ratio},
                           {"epochs", opt.epochs},          {"lr", opt.lr},
                           {"focal_gamma", opt.focal_gamma}, {"focal_alpha", opt.focal_alpha},
                           {"top_k", opt.top_k},            {"lp", opt.lp},
                           {"heads", opt.heads},            {"feature_dim", opt.feature_dim},
                           {"seed", opt.seed},              {"out", opt.out},
                           {"trace", opt.trace}};
    echo_config(resolved);

    const AnnotationData data = load_scenes(opt.in);
    int num_predicates = 1;
    for (const Scene& scene : data.scenes) {
        for (const Relationship& r : scene.ground_truth.relationships) {
            num_predicates = std::max(num_predicates, r.predicate + 1);
        }
    }

    TrainConfig config;
    config.epochs = opt.epochs;
    config.learning_rate = opt.lr;
    config.loss = opt.loss == "focal" ? LossKind::Focal : LossKind::Bce;
    config.focal_alpha = opt.focal_alpha;
    config.focal_gamma = opt.focal_gamma;
    config.top_k = opt.top_k;
    config.seed = opt.seed;
    config.sampler.strategy = sampler_strategy_from_string(opt.strategy);
    config.sampler.batch_size = opt.batch_size;
    config.sampler.positive_ratio = opt.pos_ratio;
    config.sampler.seed = opt.seed;

    ModelParams model = ModelParams::init(model_config_for(opt, num_predicates), opt.seed);
    const TrainResult result = train(model, data.scenes, config);

    Checkpoint ckpt = model.to_checkpoint();
    ckpt.metadata["train_config"] = resolved.dump();
    save_checkpoint(opt.out, ckpt);

    if (!opt.trace.empty()) {
        write_json(opt.trace, json{{"schema", "vrdlab-trace"},
                                   {"version", 1},
                                   {"config", resolved},
                                   {"skipped_scenes", result.skipped_scenes},
                                   {"loss", result.loss_trace}});
    }
    const double final_loss = result.loss_trace.empty() ? 0.0 : result.loss_trace.back();
    std::cout << "steps " << result.loss_trace.size() << ", skipped " << result.skipped_scenes
              << " scenes, final loss " << final_loss << "\n";
    return kExitOk;
}

struct InferOptions {
    std::string in;
    std::string ckpt;
    std::string out;
    int pred_top_k = 1;
    int top_k = 100;
    int threads = 1;
};

int run_infer(const InferOptions& opt) {
    const json resolved = {{"command", "infer"}, {"in", opt.in},
                           {"ckpt", opt.ckpt},   {"pred_top_k", opt.pred_top_k},
                           {"top_k", opt.top_k}, {"threads", opt.threads},
                           {"out", opt.out}};
    echo_config(resolved);

    const AnnotationData data = load_scenes(opt.in);
    const ModelParams model = ModelParams::from_checkpoint(load_checkpoint(opt.ckpt));

    InferConfig config;
    config.predicate_top_k = opt.pred_top_k;
    config.top_k = opt.top_k;

    std::vector<std::vector<TripletPrediction>> predictions(data.scenes.size());
    parallel_scenes(data.scenes.size(), opt.threads,
                    [&](size_t i) { predictions[i] = infer(model, data.scenes[i], config); });
    write_predictions_jsonl(opt.out, predictions, resolved);

    size_t total = 0;
    for (const auto& p : predictions) total += p.size();
    std::cout << "wrote " << total << " predictions for " << predictions.size() << " scenes\n";
    return kExitOk;
}

struct EvalOptions {
    std::string in;
    std::string pred;
    std::string out;
    std::string task = "relationship";
    std::string ckpt;  // enables the confident-negative report
    std::vector<int> recall = {50, 100};
    bool ap_role_flag = false;
    bool hico_default = false;
    bool hico_known = false;
    double iou_threshold = kDefaultIouThreshold;
    double fp_threshold = 0.5;
    int top_k = 100;
};

int run_eval(const EvalOptions& opt) {
    const json resolved = {{"command", "eval"},    {"in", opt.in},
                           {"pred", opt.pred},     {"task", opt.task},
                           {"recall", opt.recall}, {"ap_role", opt.ap_role_flag},
                           {"hico_default", opt.hico_default},
                           {"hico_known", opt.hico_known},
                           {"iou_threshold", opt.iou_threshold},
                           {"ckpt", opt.ckpt},
                           {"fp_threshold", opt.fp_threshold},
                           {"top_k", opt.top_k},
                           {"out", opt.out}};
    echo_config(resolved);

    const AnnotationData data = load_scenes(opt.in);
    std::vector<std::vector<TripletPrediction>> predictions = read_predictions_jsonl(opt.pred);
    predictions.resize(data.scenes.size());

    std::vector<std::vector<GtTriplet>> gts;
    gts.reserve(data.scenes.size());
    for (const Scene& scene : data.scenes) gts.push_back(gt_triplets(scene));

    const EvalTask task = opt.task == "phrase" ? EvalTask::Phrase : EvalTask::Relationship;

    json metrics = json::array();
    for (int n : opt.recall) {
        const double value = recall_at_n(predictions, gts, n, task, opt.iou_threshold);
        metrics.push_back({{"metric", "recall@" + std::to_string(n)},
                           {"config", {{"task", opt.task}, {"n", n}}},
                           {"value", value}});
        std::cout << "recall@" << n << " (" << opt.task << ") = " << value << "\n";
    }
    if (opt.ap_role_flag) {
        const ApRoleResult r = ap_role(predictions, gts, opt.iou_threshold);
        json per_verb;
        for (const auto& [verb, ap] : r.per_verb) per_verb[std::to_string(verb)] = ap;
        metrics.push_back({{"metric", "ap_role"},
                           {"config", {{"iou_threshold", opt.iou_threshold}}},
                           {"value", r.mean},
                           {"per_verb", per_verb},
                           {"verbs_without_gt", r.verbs_without_gt}});
        std::cout << "ap_role = " << r.mean << "\n";
    }
    const std::tuple<bool, HicoMode, const char*> hico_runs[] = {
        {opt.hico_default, HicoMode::Default, "hico_map_default"},
        {opt.hico_known, HicoMode::KnownObjects, "hico_map_known_objects"},
    };
    for (const auto& [enabled, mode, name] : hico_runs) {
        if (!enabled) continue;
        const HicoResult r = hico_map(predictions, gts, mode, opt.iou_threshold);
        json per_pair = json::array();
        for (const auto& [key, ap] : r.per_pair) {
            per_pair.push_back({{"verb", key.first}, {"object_class", key.second}, {"ap", ap}});
        }
        metrics.push_back({{"metric", name},
                           {"config", {{"iou_threshold", opt.iou_threshold}}},
                           {"value", r.mean},
                           {"per_pair", per_pair}});
        std::cout << name << " = " << r.mean << "\n";
    }

    // confident-negative counts per proposal class, averaged per image
    if (!opt.ckpt.empty()) {
        const ModelParams model = ModelParams::from_checkpoint(load_checkpoint(opt.ckpt));
        const FalsePositiveReport report =
            false_positive_report(model, data.scenes, opt.fp_threshold, opt.top_k);
        json per_class;
        for (ProposalClass c : kAllProposalClasses) {
            if (c == ProposalClass::Pos) continue;
            per_class[to_string(c)] = report.mean_per_image[static_cast<size_t>(c)];
        }
        metrics.push_back({{"metric", "false_positives_per_image"},
                           {"config", {{"threshold", opt.fp_threshold}, {"top_k", opt.top_k}}},
                           {"value", report.hard_negative_mean()},
                           {"per_class", per_class}});
        std::cout << "false positives per image (NEG3-5) = " << report.hard_negative_mean()
                  << "\n";
    }

    write_json(opt.out, json{{"schema", "vrdlab-metrics"},
                             {"version", 1},
                             {"config", resolved},
                             {"ap_convention", "all-point"},
                             {"metrics", std::move(metrics)}});
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale visual relationship detection laboratory"};
    app.require_subcommand(1);

    GenOptions gen;
    CLI::App* gen_cmd = app.add_subcommand("gen", "generate a synthetic annotation file");
    gen_cmd->add_option("--out", gen.out, "output annotation file")->required();
    gen_cmd->add_option("--scenes", gen.synth.scenes, "scene count");
    gen_cmd->add_option("--objects-min", gen.synth.objects_min, "objects per scene, lower bound");
    gen_cmd->add_option("--objects-max", gen.synth.objects_max, "objects per scene, upper bound");
    gen_cmd->add_option("--rel-min", gen.synth.relationships_min,
                        "relationships per scene, lower bound");
    gen_cmd->add_option("--rel-max", gen.synth.relationships_max,
                        "relationships per scene, upper bound");
    gen_cmd->add_option("--jitter", gen.synth.jitter_sigma, "detector corner noise fraction");
    gen_cmd->add_option("--drop-prob", gen.synth.drop_prob, "missed-detection probability");
    gen_cmd->add_option("--spurious-rate", gen.synth.spurious_rate,
                        "expected spurious fraction of detections");
    gen_cmd->add_option("--top-k", gen.synth.top_k, "detections kept per scene");
    gen_cmd->add_option("--classes", gen.synth.num_classes, "object class count");
    gen_cmd->add_option("--predicates", gen.synth.num_predicates, "predicate vocabulary size");
    gen_cmd->add_option("--mode", gen.mode, "general or hoi")
        ->check(CLI::IsMember({"general", "hoi"}));
    gen_cmd->add_option("--human-class", gen.synth.human_class_id, "human class id (hoi)");
    gen_cmd->add_option("--width", gen.synth.width, "frame width");
    gen_cmd->add_option("--height", gen.synth.height, "frame height");
    gen_cmd->add_option("--seed", gen.synth.seed, "generator seed");

    StatsOptions stats;
    CLI::App* stats_cmd = app.add_subcommand("stats", "proposal class distribution report");
    stats_cmd->add_option("--in", stats.in, "annotation file")->required();
    stats_cmd->add_option("--out", stats.out, "report JSON")->required();
    stats_cmd->add_option("--csv", stats.csv, "histogram CSV (class,count)");
    stats_cmd->add_option("--top-k", stats.top_k, "detections kept per scene");
    stats_cmd->add_option("--threads", stats.threads, "scene-level parallelism");

    ClassifyOptions classify;
    CLI::App* classify_cmd = app.add_subcommand("classify", "per-proposal class dump");
    classify_cmd->add_option("--in", classify.in, "annotation file")->required();
    classify_cmd->add_option("--out", classify.out, "class dump JSON")->required();
    classify_cmd->add_option("--top-k", classify.top_k, "detections kept per scene");
    classify_cmd->add_option("--masks", classify.masks, "mask-target grid dump JSON");
    classify_cmd->add_option("--lp", classify.lp, "mask side length for --masks");

    SampleOptions sample;
    CLI::App* sample_cmd = app.add_subcommand("sample", "mini-batch sampling demo");
    sample_cmd->add_option("--in", sample.in, "annotation file")->required();
    sample_cmd->add_option("--out", sample.out, "batch dump JSON")->required();
    sample_cmd->add_option("--scene", sample.scene, "scene index");
    sample_cmd->add_option("--strategy", sample.strategy, "sampling strategy")
        ->check(CLI::IsMember({"rs", "bnps", "bnps-2cls", "bnps-3cls", "bnps-3cls-hn"}));
    sample_cmd->add_option("--top-k", sample.top_k, "detections kept per scene");
    sample_cmd->add_option("--batch-size", sample.batch_size, "batch size");
    sample_cmd->add_option("--pos-ratio", sample.pos_ratio, "positive share of the batch");
    sample_cmd->add_option("--seed", sample.seed, "sampler seed");
    sample_cmd->add_option("--draws", sample.draws, "extra draws for the frequency table");

    TrainOptions train_opt;
    CLI::App* train_cmd = app.add_subcommand("train", "train the toy relationship model");
    train_cmd->add_option("--in", train_opt.in, "annotation file")->required();
    train_cmd->add_option("--out", train_opt.out, "checkpoint path")->required();
    train_cmd->add_option("--trace", train_opt.trace, "loss trace JSON");
    train_cmd->add_option("--strategy", train_opt.strategy, "sampling strategy")
        ->check(CLI::IsMember({"rs", "bnps", "bnps-2cls", "bnps-3cls", "bnps-3cls-hn", "ohem"}));
    train_cmd->add_option("--loss", train_opt.loss, "classification loss")
        ->check(CLI::IsMember({"bce", "focal"}));
    train_cmd->add_option("--batch-size", train_opt.batch_size, "proposals per step");
    train_cmd->add_option("--pos-ratio", train_opt.pos_ratio, "positive share of the batch");
    train_cmd->add_option("--epochs", train_opt.epochs, "training epochs");
    train_cmd->add_option("--lr", train_opt.lr, "learning rate");
    train_cmd->add_option("--focal-gamma", train_opt.focal_gamma, "focal focusing parameter");
    train_cmd->add_option("--focal-alpha", train_opt.focal_alpha, "focal balance coefficient");
    train_cmd->add_option("--top-k", train_opt.top_k, "detections kept per scene");
    train_cmd->add_option("--lp", train_opt.lp, "mask side length");
    train_cmd->add_option("--heads", train_opt.heads, "attention heads");
    train_cmd->add_option("--feature-dim", train_opt.feature_dim, "feature dimension");
    train_cmd->add_option("--seed", train_opt.seed, "training seed");

    InferOptions infer_opt;
    CLI::App* infer_cmd = app.add_subcommand("infer", "score all proposals of every scene");
    infer_cmd->add_option("--in", infer_opt.in, "annotation file")->required();
    infer_cmd->add_option("--ckpt", infer_opt.ckpt, "checkpoint path")->required();
    infer_cmd->add_option("--out", infer_opt.out, "prediction JSON-lines")->required();
    infer_cmd->add_option("--pred-top-k", infer_opt.pred_top_k, "predicates kept per proposal");
    infer_cmd->add_option("--top-k", infer_opt.top_k, "detections kept per scene");
    infer_cmd->add_option("--threads", infer_opt.threads, "scene-level parallelism");

    EvalOptions eval_opt;
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate predictions against ground truth");
    eval_cmd->add_option("--in", eval_opt.in, "annotation file with ground truth")->required();
    eval_cmd->add_option("--pred", eval_opt.pred, "prediction JSON-lines")->required();
    eval_cmd->add_option("--out", eval_opt.out, "metrics report JSON")->required();
    eval_cmd->add_option("--task", eval_opt.task, "matching task")
        ->check(CLI::IsMember({"relationship", "phrase"}));
    eval_cmd->add_option("--recall", eval_opt.recall, "recall@N cutoffs")->delimiter(',');
    eval_cmd->add_flag("--ap-role", eval_opt.ap_role_flag, "verb-averaged AP");
    eval_cmd->add_flag("--hico-default", eval_opt.hico_default, "(verb, object) mAP, default mode");
    eval_cmd->add_flag("--hico-known", eval_opt.hico_known,
                       "(verb, object) mAP, known-objects mode");
    eval_cmd->add_option("--iou-threshold", eval_opt.iou_threshold, "matching IoU threshold");
    eval_cmd->add_option("--ckpt", eval_opt.ckpt,
                         "checkpoint for the confident-negative class report");
    eval_cmd->add_option("--fp-threshold", eval_opt.fp_threshold,
                         "confidence threshold for the negative report");
    eval_cmd->add_option("--top-k", eval_opt.top_k, "detections kept per scene");

    // option defaults from an INI/TOML file with one section per subcommand;
    // explicit flags take precedence over config values
    app.set_config("--config", "", "option defaults, e.g. [train] with lr=0.1");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (gen_cmd->parsed()) return run_gen(gen);
        if (stats_cmd->parsed()) return run_stats(stats);
        if (classify_cmd->parsed()) return run_classify(classify);
        if (sample_cmd->parsed()) return run_sample(sample);
        if (train_cmd->parsed()) return run_train(train_opt);
        if (infer_cmd->parsed()) return run_infer(infer_opt);
        if (eval_cmd->parsed()) return run_eval(eval_opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
