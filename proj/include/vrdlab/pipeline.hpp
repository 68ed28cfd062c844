#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vrdlab/features.hpp"
#include "vrdlab/mhgat.hpp"
#include "vrdlab/nn.hpp"
#include "vrdlab/proposals.hpp"
#include "vrdlab/sampling.hpp"
#include "vrdlab/smd.hpp"

namespace vrd {

struct ModelConfig {
    int feature_dim = 32;
    int heads = 4;
    int head_dim = 8;
    int message_hidden = 32;
    int classifier_hidden = 48;
    int smd_hidden = 48;
    int num_predicates = 8;
    int mask_size = 7;
    double iou_threshold = kDefaultIouThreshold;
    std::uint64_t feature_seed = 0;
};

// Toy relationship model: feature encoders, one attention layer, a 3-layer
// perceptron emitting one sigmoid per predicate, and the mask head.
struct ModelParams {
    ModelConfig config;
    LinearLayer node_encoder;
    LinearLayer edge_encoder;
    MhgatParams gat;
    std::array<LinearLayer, 3> classifier;
    SmdHead smd;

    static ModelParams init(const ModelConfig& config, std::uint64_t seed);

    std::vector<Tensor*> parameter_list();  // stable order, matches named_parameters
    std::vector<std::pair<std::string, Tensor*>> named_parameters();

    Checkpoint to_checkpoint() const;
    static ModelParams from_checkpoint(const Checkpoint& ckpt);
};

// Supervision for one proposal: multi-hot predicate targets (union of the
// predicates of every ground-truth relationship the pair realizes; all zero
// for negatives) and the spatial mask target.
struct ProposalTargets {
    Tensor predicates;  // [num_predicates]
    MaskTarget mask;
};

ProposalTargets make_targets(const Scene& scene, const ProposalClassifier& classifier,
                             const ProposalPair& pair, const ModelConfig& config);

enum class LossKind { Bce, Focal };

// One tape-recorded forward pass of the model over a batch of proposals.
// Non-movable: the tape, bound parameters, and the owning ModelParams stay
// pinned for the object's lifetime.
class SceneForward {
public:
    SceneForward(ModelParams& model, const Scene& scene, const ProposalSet& proposals,
                 std::span<const int> batch);
    SceneForward(const SceneForward&) = delete;
    SceneForward& operator=(const SceneForward&) = delete;

    int batch_size() const { return static_cast<int>(predicate_probs_.size()); }
    Tensor predicate_probabilities(int k) const;  // [num_predicates]
    Tensor mask_probabilities(int k) const;       // [2, l_p, l_p]

    struct LossBreakdown {
        double total = 0.0;
        double classification = 0.0;
        double mask = 0.0;
    };

    LossBreakdown add_loss(std::span<const ProposalTargets> targets, LossKind kind,
                           double focal_alpha = 0.25, double focal_gamma = 2.0);
    void backward();  // valid after add_loss

    size_t parameter_count() const { return binder_.count(); }
    Tensor* parameter(size_t i) const { return binder_.parameter(i); }
    const Tensor& gradient(size_t i) const { return binder_.gradient(i); }

private:
    Graph graph_;
    ParamBinder binder_;
    int mask_size_;
    std::vector<NodeId> predicate_probs_;
    std::vector<NodeId> mask_probs_;
    NodeId total_loss_ = kNoNode;
};

// Eager (tape-free) evaluation used by inference and reporting; matches
// SceneForward's values exactly.
class EagerEvaluator {
public:
    EagerEvaluator(const ModelParams& model, const Scene& scene, const ProposalSet& proposals);

    Tensor predicate_probabilities(const ProposalPair& pair) const;
    Tensor mask_probabilities(const ProposalPair& pair) const;  // [2, l_p, l_p]

private:
    Tensor relationship_feature(const ProposalPair& pair) const;

    const ModelParams* model_;
    std::vector<int> slot_of_;      // detection index -> graph slot
    SceneGraphFeatures encoded_;    // encoder outputs
    Tensor updated_;                // [N, d] after the attention layer
};

struct TripletPrediction {
    Box subject_box;
    Box object_box;
    int subject_class = 0;
    int object_class = 0;
    int predicate = 0;
    double score = 0.0;  // s1 * s2 * s_cls
    double s1 = 0.0;     // subject detection score
    double s2 = 0.0;     // object detection score
    double s_cls = 0.0;  // predicate probability
};

struct InferConfig {
    int predicate_top_k = 1;
    int top_k = 100;
};

// Scores every proposal of the scene (no sampling), keeps the top-k
// predicates per proposal by classifier probability, and returns predictions
// sorted by score descending with stable ties.
std::vector<TripletPrediction> infer(const ModelParams& model, const Scene& scene,
                                     const InferConfig& config);

struct TrainConfig {
    int epochs = 2;
    double learning_rate = 0.05;
    double momentum = 0.9;
    double decay_rate = 0.1;
    std::optional<std::vector<int>> decay_epochs;  // default: at 68% and 92% of the run
    LossKind loss = LossKind::Bce;
    double focal_alpha = 0.25;
    double focal_gamma = 2.0;
    int top_k = 100;
    std::uint64_t seed = 0;
    SamplerConfig sampler;

    std::vector<int> resolved_decay_epochs() const;
};

struct TrainResult {
    std::vector<double> loss_trace;  // one total loss per optimization step
    int skipped_scenes = 0;          // scenes with no positive proposal
};

// Per scene and epoch: classify proposals, build the mini-batch with the
// configured sampler, run forward/backward, and apply one optimizer step.
// Scenes without positives are skipped and counted.
TrainResult train(ModelParams& model, std::span<const Scene> scenes, const TrainConfig& config);

// Confident-negative counts per proposal class: a negative proposal counts
// when any predicate probability reaches the threshold. Values are averaged
// per image.
struct FalsePositiveReport {
    std::array<std::int64_t, kNumProposalClasses> totals{};
    std::array<double, kNumProposalClasses> mean_per_image{};
    int scenes = 0;

    double hard_negative_mean() const;  // NEG3 + NEG4 + NEG5
};

FalsePositiveReport false_positive_report(const ModelParams& model,
                                          std::span<const Scene> scenes, double threshold,
                                          int top_k);

}  // namespace vrd
