#pragma once

#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace vrd {

// Dense row-major tensor of doubles. No views, no broadcasting beyond the
// bias add in linear layers; shapes are small and explicit.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape, double fill = 0.0);
    Tensor(std::vector<int> shape, std::vector<double> values);

    static Tensor vector(std::vector<double> values);
    static Tensor scalar(double value);

    const std::vector<int>& shape() const { return shape_; }
    int ndim() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    int size() const { return static_cast<int>(data_.size()); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<const double> values() const { return data_; }
    std::span<double> values() { return data_; }

    double& operator[](int i) { return data_[static_cast<size_t>(i)]; }
    double operator[](int i) const { return data_[static_cast<size_t>(i)]; }
    double& at(int i, int j);
    double at(int i, int j) const;
    double& at(int i, int j, int k);
    double at(int i, int j, int k) const;

    double item() const;  // value of a single-element tensor

    void fill(double v);
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    std::string shape_string() const;

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

// shape guards; throw std::invalid_argument with both shapes in the message
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

// y = A x for A [m,n] and x [n]; or A B for A [m,n], B [n,p]
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor concat(std::span<const Tensor> parts);

Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope);
Tensor sigmoid(const Tensor& x);
Tensor softmax(const Tensor& x);  // 1-D only; max-subtracted, sums to 1

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double c);
double dot(const Tensor& a, const Tensor& b);

// Losses over probabilities in (0,1); inputs are clamped to
// [kProbClamp, 1-kProbClamp] before the logs.
inline constexpr double kProbClamp = 1e-7;

double bce_loss(const Tensor& probabilities, const Tensor& targets);  // mean over elements

// Single-sample focal term with y in {+1,-1}; gamma=0, alpha=1 reduces to
// plain cross-entropy.
double focal_loss(double p, int y, double alpha, double gamma);

// Mean focal term over elements with {0,1} targets.
double focal_loss_mean(const Tensor& probabilities, const Tensor& targets01,
                       double alpha, double gamma);

}  // namespace vrd
