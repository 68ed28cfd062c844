#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vrdlab/graph.hpp"
#include "vrdlab/rng.hpp"
#include "vrdlab/tensor.hpp"

namespace vrd {

struct LinearLayer {
    Tensor weight;  // [out, in]
    Tensor bias;    // [out]

    static LinearLayer init(int out, int in, CounterRng& rng);  // uniform Xavier-style
    static LinearLayer zeros(int out, int in);

    int in_dim() const { return weight.dim(1); }
    int out_dim() const { return weight.dim(0); }

    Tensor apply(const Tensor& x) const;  // W x + b
};

struct BoundLinear {
    NodeId weight = kNoNode;
    NodeId bias = kNoNode;
};

// Registers parameter tensors as graph leaves and remembers the pairing so
// that gradients can be pulled out after backward() in registration order.
class ParamBinder {
public:
    explicit ParamBinder(Graph& g) : graph_(&g) {}

    NodeId tensor(Tensor& t);
    BoundLinear linear(LinearLayer& l);

    NodeId apply(const BoundLinear& l, NodeId x) const { return graph_->linear(x, l.weight, l.bias); }

    size_t count() const { return entries_.size(); }
    Tensor* parameter(size_t i) const { return entries_[i].first; }
    const Tensor& gradient(size_t i) const { return graph_->grad(entries_[i].second); }

private:
    Graph* graph_;
    std::vector<std::pair<Tensor*, NodeId>> entries_;
};

// Gradient descent with momentum and a stepwise learning-rate decay schedule.
// Velocity buffers are kept per parameter in attach order.
struct OptimizerState {
    double learning_rate = 0.01;
    double momentum = 0.9;
    double decay_rate = 0.1;
    std::vector<int> decay_epochs;  // epochs (0-based) at whose start lr decays
    std::vector<Tensor> velocity;

    void attach(std::span<Tensor* const> params);
    void start_epoch(int epoch);

    double current_lr = 0.0;  // set by attach/start_epoch
};

// v <- momentum*v + g; p <- p - lr*v. Throws on non-finite gradients so a
// diverging run stops at the offending step instead of poisoning parameters.
void optimizer_step(std::span<Tensor* const> params, std::span<const Tensor> grads,
                    OptimizerState& state);

// Central finite differences against analytic gradients. eval_loss must
// recompute the loss from the *current* parameter values each call. An
// element passes when its absolute error is under the floor or its relative
// error is under the tolerance; the check passes when every element does.
struct GradientCheckReport {
    bool passed = true;
    double worst_relative_error = 0.0;
    double worst_absolute_error = 0.0;
    size_t worst_parameter = 0;
    int worst_element = 0;
};

GradientCheckReport check_gradients(std::span<Tensor* const> params,
                                    std::span<const Tensor> analytic,
                                    const std::function<double()>& eval_loss,
                                    double step = 1e-5, double relative_tol = 1e-4,
                                    double absolute_floor = 1e-6);

// Named-tensor checkpoint container: versioned binary, little-endian 64-bit
// floats, with a string metadata section for run configuration.
struct Checkpoint {
    std::map<std::string, std::string> metadata;
    std::vector<std::pair<std::string, Tensor>> tensors;

    const Tensor& tensor(const std::string& name) const;
    std::string meta(const std::string& key) const;  // throws if missing
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace vrd
