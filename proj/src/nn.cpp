#include "vrdlab/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace vrd {

LinearLayer LinearLayer::init(int out, int in, CounterRng& rng) {
    LinearLayer l;
    l.weight = Tensor({out, in});
    l.bias = Tensor({out});
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    for (int i = 0; i < l.weight.size(); ++i) l.weight[i] = rng.uniform(-bound, bound);
    return l;
}

LinearLayer LinearLayer::zeros(int out, int in) {
    LinearLayer l;
    l.weight = Tensor({out, in});
    l.bias = Tensor({out});
    return l;
}

Tensor LinearLayer::apply(const Tensor& x) const { return add(matmul(weight, x), bias); }

NodeId ParamBinder::tensor(Tensor& t) {
    const NodeId id = graph_->input(t);
    entries_.emplace_back(&t, id);
    return id;
}

BoundLinear ParamBinder::linear(LinearLayer& l) {
    BoundLinear b;
    b.weight = tensor(l.weight);
    b.bias = tensor(l.bias);
    return b;
}

void OptimizerState::attach(std::span<Tensor* const> params) {
    if (learning_rate <= 0.0) throw std::invalid_argument("OptimizerState: learning rate must be > 0");
    velocity.clear();
    velocity.reserve(params.size());
    for (Tensor* p : params) velocity.emplace_back(p->shape());
    current_lr = learning_rate;
}

void OptimizerState::start_epoch(int epoch) {
    current_lr = learning_rate;
    for (int d : decay_epochs) {
        if (epoch >= d) current_lr *= decay_rate;
    }
}

void optimizer_step(std::span<Tensor* const> params, std::span<const Tensor> grads,
                    OptimizerState& state) {
    if (params.size() != grads.size() || params.size() != state.velocity.size()) {
        throw std::invalid_argument("optimizer_step: parameter/gradient count mismatch");
    }
    for (size_t k = 0; k < params.size(); ++k) {
        if (!grads[k].all_finite()) {
            throw std::runtime_error("optimizer_step: non-finite gradient for parameter " +
                                     std::to_string(k) + ", step aborted");
        }
        require_same_shape(*params[k], grads[k], "optimizer_step");
    }
    const double lr = state.current_lr > 0.0 ? state.current_lr : state.learning_rate;
    for (size_t k = 0; k < params.size(); ++k) {
        Tensor& p = *params[k];
        Tensor& v = state.velocity[k];
        const Tensor& g = grads[k];
        for (int i = 0; i < p.size(); ++i) {
            v[i] = state.momentum * v[i] + g[i];
            p[i] -= lr * v[i];
        }
    }
}

GradientCheckReport check_gradients(std::span<Tensor* const> params,
                                    std::span<const Tensor> analytic,
                                    const std::function<double()>& eval_loss,
                                    double step, double relative_tol, double absolute_floor) {
    if (params.size() != analytic.size()) {
        throw std::invalid_argument("check_gradients: parameter/gradient count mismatch");
    }
    GradientCheckReport report;
    double worst = -1.0;
    for (size_t k = 0; k < params.size(); ++k) {
        Tensor& p = *params[k];
        for (int i = 0; i < p.size(); ++i) {
            const double saved = p[i];
            const double exact = analytic[k][i];
            double abs_err = 0.0, rel_err = 0.0;
            bool element_ok = false;
            // a difference that straddles an activation kink is off by O(1);
            // shrinking the step moves the stencil off the kink, so retry
            // before declaring a mismatch
            for (const double h : {step, step * 0.1, step * 0.01}) {
                p[i] = saved + h;
                const double up = eval_loss();
                p[i] = saved - h;
                const double down = eval_loss();
                p[i] = saved;
                const double numeric = (up - down) / (2.0 * h);
                abs_err = std::abs(numeric - exact);
                rel_err =
                    abs_err == 0.0 ? 0.0 : abs_err / std::max(std::abs(exact), std::abs(numeric));
                if (abs_err <= absolute_floor || rel_err <= relative_tol) {
                    element_ok = true;
                    break;
                }
            }
            if (!element_ok) report.passed = false;
            const double score = element_ok ? 0.0 : rel_err;
            if (score > worst || worst < 0.0) {
                worst = score;
                report.worst_relative_error = rel_err;
                report.worst_absolute_error = abs_err;
                report.worst_parameter = k;
                report.worst_element = i;
            }
        }
    }
    return report;
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("checkpoint: truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& os, double v) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("checkpoint: truncated");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

void put_string(std::ostream& os, const std::string& s) {
    put_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
    const std::uint32_t n = get_u32(is);
    std::string s(n, '\0');
    if (!is.read(s.data(), n)) throw std::runtime_error("checkpoint: truncated");
    return s;
}

constexpr char kMagic[8] = {'V', 'R', 'D', 'L', 'C', 'K', 'P', '\n'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

const Tensor& Checkpoint::tensor(const std::string& name) const {
    for (const auto& [n, t] : tensors) {
        if (n == name) return t;
    }
    throw std::runtime_error("checkpoint: missing tensor " + name);
}

std::string Checkpoint::meta(const std::string& key) const {
    auto it = metadata.find(key);
    if (it == metadata.end()) throw std::runtime_error("checkpoint: missing metadata " + key);
    return it->second;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
    os.write(kMagic, 8);
    put_u32(os, kVersion);
    put_u32(os, static_cast<std::uint32_t>(ckpt.metadata.size()));
    for (const auto& [k, v] : ckpt.metadata) {
        put_string(os, k);
        put_string(os, v);
    }
    put_u32(os, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, t] : ckpt.tensors) {
        if (!t.all_finite()) throw std::runtime_error("checkpoint: non-finite tensor " + name);
        put_string(os, name);
        put_u32(os, static_cast<std::uint32_t>(t.ndim()));
        for (int d = 0; d < t.ndim(); ++d) put_u32(os, static_cast<std::uint32_t>(t.dim(d)));
        for (int i = 0; i < t.size(); ++i) put_f64(os, t[i]);
    }
    if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
        throw std::runtime_error("checkpoint: bad magic in " + path);
    }
    const std::uint32_t version = get_u32(is);
    if (version != kVersion) {
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    }
    Checkpoint ckpt;
    const std::uint32_t n_meta = get_u32(is);
    for (std::uint32_t i = 0; i < n_meta; ++i) {
        std::string k = get_string(is);
        std::string v = get_string(is);
        ckpt.metadata.emplace(std::move(k), std::move(v));
    }
    const std::uint32_t n_tensors = get_u32(is);
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        std::string name = get_string(is);
        const std::uint32_t ndim = get_u32(is);
        std::vector<int> shape;
        size_t total = 1;
        for (std::uint32_t d = 0; d < ndim; ++d) {
            shape.push_back(static_cast<int>(get_u32(is)));
            total *= static_cast<size_t>(shape.back());
        }
        std::vector<double> values(total);
        for (size_t v = 0; v < total; ++v) values[v] = get_f64(is);
        ckpt.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(values)));
    }
    return ckpt;
}

}  // namespace vrd
