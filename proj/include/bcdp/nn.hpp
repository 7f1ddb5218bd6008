#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bcdp/rng.hpp"

namespace bcdp::nn {

/// Rows are samples.
using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

enum class Activation { identity, relu, tanh_scaled, sigmoid };

enum class LossKind {
    mse,                         ///< mean over all entries of (o - y)^2
    bce,                         ///< binary cross-entropy on probabilities, targets in {0, 1}
    neg_log_likelihood_gaussian, ///< unit-variance Gaussian NLL, summed over outputs, mean over samples
    neg_mean_scalar,             ///< -mean(o) for a single output column; targets unused
    cross_entropy,               ///< softmax cross-entropy on logits; targets column holds class indices
};

std::string to_string(Activation a);
Activation parse_activation(const std::string& text);

struct Layer {
    Matrix weight; ///< out x in
    RowVector bias;
};

/// Per-layer arrays shaped like a DenseNet's parameters.
struct Gradients {
    std::vector<Matrix> weight;
    std::vector<RowVector> bias;

    Gradients& operator+=(const Gradients& other);
    /// this += scale * other
    void add_scaled(const Gradients& other, double scale);
    void scale(double factor);
    std::vector<double> flat() const;
    bool same_shape(const Gradients& other) const;
};

/// Intermediate values kept by a forward pass for backpropagation.
struct ForwardCache {
    std::vector<Matrix> inputs;     ///< input to each layer
    std::vector<Matrix> pre;        ///< pre-activation of each layer
    Matrix output;
};

/// Fully connected network: ReLU hidden layers and a configurable output head.
class DenseNet {
public:
    DenseNet() = default;
    /// Zero-initialized parameters.
    DenseNet(std::vector<int> layer_dims, Activation output, double output_scale = 1.0);

    /// He-style uniform fan-in initialization with zero biases.
    static DenseNet initialized(std::vector<int> layer_dims, Activation output, Rng& rng, double output_scale = 1.0);

    const std::vector<int>& layer_dims() const { return dims_; }
    Activation output_activation() const { return output_; }
    double output_scale() const { return scale_; }
    int input_dim() const { return dims_.front(); }
    int output_dim() const { return dims_.back(); }
    std::vector<Layer>& layers() { return layers_; }
    const std::vector<Layer>& layers() const { return layers_; }

    Matrix forward(const Matrix& inputs) const;
    Matrix forward(const Matrix& inputs, ForwardCache& cache) const;

    /// Gradients of a scalar loss given dL/d(output); optionally dL/d(input).
    Gradients backward(const ForwardCache& cache, const Matrix& d_output, Matrix* d_input = nullptr) const;

    Gradients zero_gradients() const;
    std::size_t num_params() const;
    std::vector<double> flat_params() const;
    void set_flat_params(std::span<const double> params);
    bool all_finite() const;
    bool same_architecture(const DenseNet& other) const;

    friend bool operator==(const DenseNet& a, const DenseNet& b);

private:
    std::vector<int> dims_;
    Activation output_ = Activation::identity;
    double scale_ = 1.0;
    std::vector<Layer> layers_;
};

struct Batch {
    Matrix inputs;
    Matrix targets;
};

struct LossOutput {
    double loss = 0.0;
    Matrix d_output;
};

/// Loss value and dL/d(output) for network outputs (post-activation).
LossOutput output_loss(LossKind kind, const Matrix& outputs, const Matrix& targets);

struct LossAndGrad {
    double loss = 0.0;
    Gradients grads;
};

/// Exact gradient of the mean batch loss. Rejects non-finite inputs.
LossAndGrad loss_and_grad(const DenseNet& net, const Batch& batch, LossKind kind);

struct AdamState {
    Gradients m;
    Gradients v;
    long step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_net(const DenseNet& net, double lr);
};

/// One bias-corrected Adam step; increments the step counter.
void adam_update(DenseNet& net, const Gradients& grads, AdamState& adam);

/// target <- tau * online + (1 - tau) * target
void soft_update(DenseNet& target, const DenseNet& online, double tau);

/// Largest |analytic - numeric| / max(|numeric|, 1e-6) over checked parameters.
double max_relative_error(std::span<const double> analytic, std::span<const double> numeric);

/// Central-difference check of `analytic` against `loss`, evaluated at perturbed copies of `net`.
/// Above `max_params` parameters a seeded subsample is checked.
double grad_check(const DenseNet& net, const std::function<double(const DenseNet&)>& loss, const Gradients& analytic,
                  double h, std::uint64_t seed = 0, std::size_t max_params = 10000);

/// Analytic loss_and_grad against central differences of the same loss.
double grad_check(const DenseNet& net, const Batch& batch, LossKind kind, double h, std::uint64_t seed = 0);

nlohmann::json to_json(const DenseNet& net);
DenseNet net_from_json(const nlohmann::json& j);

} // namespace bcdp::nn
