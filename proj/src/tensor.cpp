#include "vrdlab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace vrd {

namespace {

size_t checked_size(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("Tensor: non-positive dimension");
        n *= static_cast<size_t>(d);
    }
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<int> shape, double fill)
    : shape_(std::move(shape)), data_(checked_size(shape_), fill) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
    if (checked_size(shape_) != data_.size()) {
        throw std::invalid_argument("Tensor: value count does not match shape");
    }
}

Tensor Tensor::vector(std::vector<double> values) {
    const int n = static_cast<int>(values.size());
    return Tensor({n}, std::move(values));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

double& Tensor::at(int i, int j) {
    return data_[static_cast<size_t>(i) * static_cast<size_t>(shape_[1]) + static_cast<size_t>(j)];
}
double Tensor::at(int i, int j) const {
    return data_[static_cast<size_t>(i) * static_cast<size_t>(shape_[1]) + static_cast<size_t>(j)];
}
double& Tensor::at(int i, int j, int k) {
    const size_t d1 = static_cast<size_t>(shape_[1]);
    const size_t d2 = static_cast<size_t>(shape_[2]);
    return data_[(static_cast<size_t>(i) * d1 + static_cast<size_t>(j)) * d2 + static_cast<size_t>(k)];
}
double Tensor::at(int i, int j, int k) const {
    const size_t d1 = static_cast<size_t>(shape_[1]);
    const size_t d2 = static_cast<size_t>(shape_[2]);
    return data_[(static_cast<size_t>(i) * d1 + static_cast<size_t>(j)) * d2 + static_cast<size_t>(k)];
}

double Tensor::item() const {
    if (data_.size() != 1) throw std::invalid_argument("Tensor::item: size != 1");
    return data_[0];
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
    std::string s = "[";
    for (size_t i = 0; i < shape_.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape_[i]);
    }
    return s + "]";
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(what) + ": shape mismatch " + a.shape_string() +
                                    " vs " + b.shape_string());
    }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2) throw std::invalid_argument("matmul: lhs must be 2-D");
    const int m = a.dim(0), n = a.dim(1);
    if (b.ndim() == 1) {
        if (b.dim(0) != n) {
            throw std::invalid_argument("matmul: inner dims " + a.shape_string() + " vs " +
                                        b.shape_string());
        }
        Tensor y({m});
        for (int i = 0; i < m; ++i) {
            double acc = 0.0;
            const double* row = a.data() + static_cast<size_t>(i) * static_cast<size_t>(n);
            for (int j = 0; j < n; ++j) acc += row[j] * b[j];
            y[i] = acc;
        }
        return y;
    }
    if (b.ndim() != 2 || b.dim(0) != n) {
        throw std::invalid_argument("matmul: inner dims " + a.shape_string() + " vs " +
                                    b.shape_string());
    }
    const int p = b.dim(1);
    Tensor y({m, p});
    for (int i = 0; i < m; ++i) {
        for (int k = 0; k < n; ++k) {
            const double av = a.at(i, k);
            if (av == 0.0) continue;
            for (int j = 0; j < p; ++j) y.at(i, j) += av * b.at(k, j);
        }
    }
    return y;
}

Tensor concat(std::span<const Tensor> parts) {
    int n = 0;
    for (const Tensor& t : parts) {
        if (t.ndim() != 1) throw std::invalid_argument("concat: 1-D tensors only");
        n += t.size();
    }
    if (n == 0) throw std::invalid_argument("concat: empty result");
    Tensor y({n});
    int at = 0;
    for (const Tensor& t : parts) {
        std::copy(t.data(), t.data() + t.size(), y.data() + at);
        at += t.size();
    }
    return y;
}

namespace {

template <typename F>
Tensor elementwise(const Tensor& x, F f) {
    Tensor y(x.shape());
    for (int i = 0; i < x.size(); ++i) y[i] = f(x[i]);
    return y;
}

}  // namespace

Tensor relu(const Tensor& x) {
    return elementwise(x, [](double v) { return v > 0.0 ? v : 0.0; });
}

Tensor leaky_relu(const Tensor& x, double slope) {
    return elementwise(x, [slope](double v) { return v > 0.0 ? v : slope * v; });
}

Tensor sigmoid(const Tensor& x) {
    return elementwise(x, [](double v) {
        // split on sign so exp never overflows
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
    });
}

Tensor softmax(const Tensor& x) {
    if (x.ndim() != 1) throw std::invalid_argument("softmax: 1-D only");
    const double m = *std::max_element(x.data(), x.data() + x.size());
    Tensor y(x.shape());
    double sum = 0.0;
    for (int i = 0; i < x.size(); ++i) {
        y[i] = std::exp(x[i] - m);
        sum += y[i];
    }
    for (int i = 0; i < x.size(); ++i) y[i] /= sum;
    return y;
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor y(a.shape());
    for (int i = 0; i < a.size(); ++i) y[i] = a[i] + b[i];
    return y;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor y(a.shape());
    for (int i = 0; i < a.size(); ++i) y[i] = a[i] - b[i];
    return y;
}

Tensor scale(const Tensor& x, double c) {
    return elementwise(x, [c](double v) { return c * v; });
}

double dot(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "dot");
    double acc = 0.0;
    for (int i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

namespace {

double clamp_prob(double p) {
    return std::min(std::max(p, kProbClamp), 1.0 - kProbClamp);
}

}  // namespace

double bce_loss(const Tensor& probabilities, const Tensor& targets) {
    require_same_shape(probabilities, targets, "bce_loss");
    double acc = 0.0;
    for (int i = 0; i < probabilities.size(); ++i) {
        const double p = clamp_prob(probabilities[i]);
        const double y = targets[i];
        acc += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    }
    return acc / static_cast<double>(probabilities.size());
}

double focal_loss(double p, int y, double alpha, double gamma) {
    const double pt = clamp_prob(y == 1 ? p : 1.0 - p);
    return -alpha * std::pow(1.0 - pt, gamma) * std::log(pt);
}

double focal_loss_mean(const Tensor& probabilities, const Tensor& targets01,
                       double alpha, double gamma) {
    require_same_shape(probabilities, targets01, "focal_loss_mean");
    double acc = 0.0;
    for (int i = 0; i < probabilities.size(); ++i) {
        acc += focal_loss(probabilities[i], targets01[i] > 0.5 ? 1 : -1, alpha, gamma);
    }
    return acc / static_cast<double>(probabilities.size());
}

}  // namespace vrd
