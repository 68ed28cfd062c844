#include "vrdlab/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vrd {

namespace {

double clamp_prob(double p) {
    return std::min(std::max(p, kProbClamp), 1.0 - kProbClamp);
}

bool clamped(double p) { return p <= kProbClamp || p >= 1.0 - kProbClamp; }

}  // namespace

NodeId Graph::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Graph::input(Tensor value) {
    Node n;
    n.op = Op::Input;
    n.value = std::move(value);
    return push(std::move(n));
}

NodeId Graph::linear(NodeId x, NodeId weight, NodeId bias) {
    const Tensor& xv = value(x);
    const Tensor& wv = value(weight);
    const Tensor& bv = value(bias);
    if (wv.ndim() != 2 || xv.ndim() != 1 || bv.ndim() != 1 || wv.dim(1) != xv.dim(0) ||
        wv.dim(0) != bv.dim(0)) {
        throw std::invalid_argument("Graph::linear: shapes " + wv.shape_string() + " * " +
                                    xv.shape_string() + " + " + bv.shape_string());
    }
    Node n;
    n.op = Op::Linear;
    n.a = x;
    n.b = weight;
    n.c = bias;
    n.value = vrd::add(matmul(wv, xv), bv);
    return push(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) {
    Node n;
    n.op = Op::Add;
    n.a = a;
    n.b = b;
    n.value = vrd::add(value(a), value(b));
    return push(std::move(n));
}

NodeId Graph::sum(std::span<const NodeId> terms) {
    if (terms.empty()) throw std::invalid_argument("Graph::sum: no terms");
    Node n;
    n.op = Op::Sum;
    n.list.assign(terms.begin(), terms.end());
    Tensor acc = value(terms[0]);
    for (size_t i = 1; i < terms.size(); ++i) acc = vrd::add(acc, value(terms[i]));
    n.value = std::move(acc);
    return push(std::move(n));
}

NodeId Graph::concat(std::span<const NodeId> parts) {
    if (parts.empty()) throw std::invalid_argument("Graph::concat: no parts");
    std::vector<Tensor> vals;
    vals.reserve(parts.size());
    for (NodeId id : parts) vals.push_back(value(id));
    Node n;
    n.op = Op::Concat;
    n.list.assign(parts.begin(), parts.end());
    n.value = vrd::concat(vals);
    return push(std::move(n));
}

NodeId Graph::relu(NodeId x) {
    Node n;
    n.op = Op::Relu;
    n.a = x;
    n.value = vrd::relu(value(x));
    return push(std::move(n));
}

NodeId Graph::leaky_relu(NodeId x, double slope) {
    Node n;
    n.op = Op::LeakyRelu;
    n.a = x;
    n.p0 = slope;
    n.value = vrd::leaky_relu(value(x), slope);
    return push(std::move(n));
}

NodeId Graph::sigmoid(NodeId x) {
    Node n;
    n.op = Op::Sigmoid;
    n.a = x;
    n.value = vrd::sigmoid(value(x));
    return push(std::move(n));
}

NodeId Graph::softmax(NodeId x) {
    Node n;
    n.op = Op::Softmax;
    n.a = x;
    n.value = vrd::softmax(value(x));
    return push(std::move(n));
}

NodeId Graph::dot(NodeId a, NodeId b) {
    Node n;
    n.op = Op::Dot;
    n.a = a;
    n.b = b;
    n.value = Tensor::scalar(vrd::dot(value(a), value(b)));
    return push(std::move(n));
}

NodeId Graph::scale(NodeId x, double c) {
    Node n;
    n.op = Op::Scale;
    n.a = x;
    n.p0 = c;
    n.value = vrd::scale(value(x), c);
    return push(std::move(n));
}

NodeId Graph::mul_scalar(NodeId s, NodeId x) {
    if (value(s).size() != 1) throw std::invalid_argument("Graph::mul_scalar: s must be [1]");
    Node n;
    n.op = Op::MulScalar;
    n.a = s;
    n.b = x;
    n.value = vrd::scale(value(x), value(s).item());
    return push(std::move(n));
}

NodeId Graph::stack(std::span<const NodeId> scalars) {
    if (scalars.empty()) throw std::invalid_argument("Graph::stack: no inputs");
    Node n;
    n.op = Op::Stack;
    n.list.assign(scalars.begin(), scalars.end());
    Tensor v({static_cast<int>(scalars.size())});
    for (size_t i = 0; i < scalars.size(); ++i) v[static_cast<int>(i)] = value(scalars[i]).item();
    n.value = std::move(v);
    return push(std::move(n));
}

NodeId Graph::weighted_sum(NodeId coeffs, std::span<const NodeId> vectors) {
    const Tensor& cv = value(coeffs);
    if (cv.ndim() != 1 || static_cast<size_t>(cv.size()) != vectors.size()) {
        throw std::invalid_argument("Graph::weighted_sum: coeff count mismatch");
    }
    Node n;
    n.op = Op::WeightedSum;
    n.a = coeffs;
    n.list.assign(vectors.begin(), vectors.end());
    Tensor acc(value(vectors[0]).shape());
    for (size_t j = 0; j < vectors.size(); ++j) {
        const Tensor& vj = value(vectors[j]);
        require_same_shape(acc, vj, "Graph::weighted_sum");
        const double c = cv[static_cast<int>(j)];
        for (int i = 0; i < acc.size(); ++i) acc[i] += c * vj[i];
    }
    n.value = std::move(acc);
    return push(std::move(n));
}

NodeId Graph::bce_mean(NodeId probabilities, Tensor targets) {
    require_same_shape(value(probabilities), targets, "Graph::bce_mean");
    Node n;
    n.op = Op::BceMean;
    n.a = probabilities;
    n.value = Tensor::scalar(vrd::bce_loss(value(probabilities), targets));
    n.aux = std::move(targets);
    return push(std::move(n));
}

NodeId Graph::focal_mean(NodeId probabilities, Tensor targets01, double alpha, double gamma) {
    require_same_shape(value(probabilities), targets01, "Graph::focal_mean");
    Node n;
    n.op = Op::FocalMean;
    n.a = probabilities;
    n.p0 = alpha;
    n.p1 = gamma;
    n.value = Tensor::scalar(vrd::focal_loss_mean(value(probabilities), targets01, alpha, gamma));
    n.aux = std::move(targets01);
    return push(std::move(n));
}

const Tensor& Graph::grad(NodeId id) const {
    if (!has_gradients_) throw std::logic_error("Graph::grad: backward() has not run");
    return nodes_[static_cast<size_t>(id)].grad;
}

Tensor& Graph::grad_ref(NodeId id) { return nodes_[static_cast<size_t>(id)].grad; }

void Graph::backward(NodeId loss) {
    if (loss < 0 || static_cast<size_t>(loss) >= nodes_.size()) {
        throw std::invalid_argument("Graph::backward: unknown node");
    }
    if (value(loss).size() != 1) {
        throw std::invalid_argument("Graph::backward: loss must be a scalar");
    }
    for (Node& n : nodes_) {
        n.grad = Tensor(n.value.shape());
    }
    nodes_[static_cast<size_t>(loss)].grad[0] = 1.0;
    for (NodeId id = loss; id >= 0; --id) backprop_node(id);
    has_gradients_ = true;
}

void Graph::backprop_node(NodeId id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    const Tensor& g = n.grad;

    switch (n.op) {
        case Op::Input:
            break;

        case Op::Linear: {
            const Tensor& x = value(n.a);
            const Tensor& w = value(n.b);
            Tensor& gx = grad_ref(n.a);
            Tensor& gw = grad_ref(n.b);
            Tensor& gb = grad_ref(n.c);
            const int m = w.dim(0), k = w.dim(1);
            for (int i = 0; i < m; ++i) {
                const double gi = g[i];
                if (gi == 0.0) continue;
                gb[i] += gi;
                for (int j = 0; j < k; ++j) {
                    gw.at(i, j) += gi * x[j];
                    gx[j] += gi * w.at(i, j);
                }
            }
            break;
        }

        case Op::Add: {
            Tensor& ga = grad_ref(n.a);
            Tensor& gb = grad_ref(n.b);
            for (int i = 0; i < g.size(); ++i) {
                ga[i] += g[i];
                gb[i] += g[i];
            }
            break;
        }

        case Op::Sum: {
            for (NodeId t : n.list) {
                Tensor& gt = grad_ref(t);
                for (int i = 0; i < g.size(); ++i) gt[i] += g[i];
            }
            break;
        }

        case Op::Concat: {
            int at = 0;
            for (NodeId part : n.list) {
                Tensor& gp = grad_ref(part);
                for (int i = 0; i < gp.size(); ++i) gp[i] += g[at + i];
                at += gp.size();
            }
            break;
        }

        case Op::Relu: {
            const Tensor& x = value(n.a);
            Tensor& gx = grad_ref(n.a);
            for (int i = 0; i < g.size(); ++i) gx[i] += x[i] > 0.0 ? g[i] : 0.0;
            break;
        }

        case Op::LeakyRelu: {
            const Tensor& x = value(n.a);
            Tensor& gx = grad_ref(n.a);
            for (int i = 0; i < g.size(); ++i) gx[i] += x[i] > 0.0 ? g[i] : n.p0 * g[i];
            break;
        }

        case Op::Sigmoid: {
            Tensor& gx = grad_ref(n.a);
            for (int i = 0; i < g.size(); ++i) {
                const double y = n.value[i];
                gx[i] += g[i] * y * (1.0 - y);
            }
            break;
        }

        case Op::Softmax: {
            // dx = y .* (g - <y, g>)
            Tensor& gx = grad_ref(n.a);
            double inner = 0.0;
            for (int i = 0; i < g.size(); ++i) inner += n.value[i] * g[i];
            for (int i = 0; i < g.size(); ++i) gx[i] += n.value[i] * (g[i] - inner);
            break;
        }

        case Op::Dot: {
            const double gs = g[0];
            const Tensor& a = value(n.a);
            const Tensor& b = value(n.b);
            Tensor& ga = grad_ref(n.a);
            Tensor& gb = grad_ref(n.b);
            for (int i = 0; i < a.size(); ++i) {
                ga[i] += gs * b[i];
                gb[i] += gs * a[i];
            }
            break;
        }

        case Op::Scale: {
            Tensor& gx = grad_ref(n.a);
            for (int i = 0; i < g.size(); ++i) gx[i] += n.p0 * g[i];
            break;
        }

        case Op::MulScalar: {
            const double s = value(n.a).item();
            const Tensor& x = value(n.b);
            Tensor& gs = grad_ref(n.a);
            Tensor& gx = grad_ref(n.b);
            for (int i = 0; i < g.size(); ++i) {
                gs[0] += g[i] * x[i];
                gx[i] += s * g[i];
            }
            break;
        }

        case Op::Stack: {
            for (size_t i = 0; i < n.list.size(); ++i) {
                grad_ref(n.list[i])[0] += g[static_cast<int>(i)];
            }
            break;
        }

        case Op::WeightedSum: {
            const Tensor& c = value(n.a);
            Tensor& gc = grad_ref(n.a);
            for (size_t j = 0; j < n.list.size(); ++j) {
                const Tensor& vj = value(n.list[j]);
                Tensor& gv = grad_ref(n.list[j]);
                const double cj = c[static_cast<int>(j)];
                double acc = 0.0;
                for (int i = 0; i < g.size(); ++i) {
                    acc += g[i] * vj[i];
                    gv[i] += cj * g[i];
                }
                gc[static_cast<int>(j)] += acc;
            }
            break;
        }

        case Op::BceMean: {
            // d/dp of mean BCE: (p - y) / (p (1-p) n); flat where clamped
            const Tensor& p = value(n.a);
            Tensor& gp = grad_ref(n.a);
            const double gs = g[0] / static_cast<double>(p.size());
            for (int i = 0; i < p.size(); ++i) {
                if (clamped(p[i])) continue;
                const double pc = clamp_prob(p[i]);
                gp[i] += gs * (pc - n.aux[i]) / (pc * (1.0 - pc));
            }
            break;
        }

        case Op::FocalMean: {
            const Tensor& p = value(n.a);
            Tensor& gp = grad_ref(n.a);
            const double gs = g[0] / static_cast<double>(p.size());
            const double alpha = n.p0, gamma = n.p1;
            for (int i = 0; i < p.size(); ++i) {
                if (clamped(p[i])) continue;
                const int y = n.aux[i] > 0.5 ? 1 : -1;
                const double pt = clamp_prob(y == 1 ? p[i] : 1.0 - p[i]);
                const double pow_g = std::pow(1.0 - pt, gamma);
                const double term1 =
                    gamma == 0.0 ? 0.0 : alpha * gamma * std::pow(1.0 - pt, gamma - 1.0) * std::log(pt);
                const double dpt = term1 - alpha * pow_g / pt;
                gp[i] += gs * (y == 1 ? dpt : -dpt);
            }
            break;
        }
    }
}

}  // namespace vrd
