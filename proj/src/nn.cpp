#include "bcdp/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bcdp/error.hpp"

namespace bcdp::nn {

namespace {

constexpr double kSigmoidLo = std::numeric_limits<double>::min();
const double kSigmoidHi = std::nextafter(1.0, 0.0);

Matrix activate(Activation act, const Matrix& z, double scale) {
    switch (act) {
    case Activation::identity: return z;
    case Activation::relu: return z.cwiseMax(0.0);
    case Activation::tanh_scaled: return scale * z.array().tanh().matrix();
    case Activation::sigmoid:
        return z.unaryExpr([](double v) { return std::clamp(1.0 / (1.0 + std::exp(-v)), kSigmoidLo, kSigmoidHi); });
    }
    return z;
}

// dL/dz given dL/da, the pre-activation z and the activation a.
Matrix activation_backward(Activation act, const Matrix& z, const Matrix& a, const Matrix& d_a, double scale) {
    switch (act) {
    case Activation::identity: return d_a;
    case Activation::relu: return (z.array() > 0.0).select(d_a, 0.0);
    case Activation::tanh_scaled: {
        const auto t = (a.array() / scale);
        return (d_a.array() * scale * (1.0 - t * t)).matrix();
    }
    case Activation::sigmoid: return (d_a.array() * a.array() * (1.0 - a.array())).matrix();
    }
    return d_a;
}

} // namespace

std::string to_string(Activation a) {
    switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh_scaled: return "tanh_scaled";
    case Activation::sigmoid: return "sigmoid";
    }
    return "identity";
}

Activation parse_activation(const std::string& text) {
    if (text == "identity") return Activation::identity;
    if (text == "relu") return Activation::relu;
    if (text == "tanh_scaled") return Activation::tanh_scaled;
    if (text == "sigmoid") return Activation::sigmoid;
    throw ValidationError("unknown activation '" + text + "'");
}

// ---------------------------------------------------------------------------

Gradients& Gradients::operator+=(const Gradients& other) {
    add_scaled(other, 1.0);
    return *this;
}

void Gradients::add_scaled(const Gradients& other, double scale) {
    if (!same_shape(other)) throw StructuralError("gradient shapes differ");
    for (std::size_t i = 0; i < weight.size(); ++i) {
        weight[i] += scale * other.weight[i];
        bias[i] += scale * other.bias[i];
    }
}

void Gradients::scale(double factor) {
    for (std::size_t i = 0; i < weight.size(); ++i) {
        weight[i] *= factor;
        bias[i] *= factor;
    }
}

std::vector<double> Gradients::flat() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < weight.size(); ++i) {
        for (Eigen::Index r = 0; r < weight[i].rows(); ++r)
            for (Eigen::Index c = 0; c < weight[i].cols(); ++c) out.push_back(weight[i](r, c));
        for (Eigen::Index c = 0; c < bias[i].size(); ++c) out.push_back(bias[i](c));
    }
    return out;
}

bool Gradients::same_shape(const Gradients& other) const {
    if (weight.size() != other.weight.size() || bias.size() != other.bias.size()) return false;
    for (std::size_t i = 0; i < weight.size(); ++i) {
        if (weight[i].rows() != other.weight[i].rows() || weight[i].cols() != other.weight[i].cols()) return false;
        if (bias[i].size() != other.bias[i].size()) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------

DenseNet::DenseNet(std::vector<int> layer_dims, Activation output, double output_scale)
    : dims_(std::move(layer_dims)), output_(output), scale_(output_scale) {
    if (dims_.size() < 2) throw StructuralError("a network needs at least input and output widths");
    for (int d : dims_)
        if (d <= 0) throw StructuralError("layer widths must be positive");
    if (!(scale_ > 0.0)) throw StructuralError("output scale must be positive");
    for (std::size_t i = 0; i + 1 < dims_.size(); ++i)
        layers_.push_back({Matrix::Zero(dims_[i + 1], dims_[i]), RowVector::Zero(dims_[i + 1])});
}

DenseNet DenseNet::initialized(std::vector<int> layer_dims, Activation output, Rng& rng, double output_scale) {
    DenseNet net(std::move(layer_dims), output, output_scale);
    for (auto& layer : net.layers_) {
        const double limit = std::sqrt(6.0 / static_cast<double>(layer.weight.cols()));
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = rng.uniform(-limit, limit);
    }
    return net;
}

Matrix DenseNet::forward(const Matrix& inputs) const {
    ForwardCache cache;
    return forward(inputs, cache);
}

Matrix DenseNet::forward(const Matrix& inputs, ForwardCache& cache) const {
    if (inputs.cols() != input_dim())
        throw StructuralError("input width " + std::to_string(inputs.cols()) + " does not match network input " +
                              std::to_string(input_dim()));
    cache.inputs.clear();
    cache.pre.clear();
    Matrix h = inputs;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& layer = layers_[i];
        Matrix z = h * layer.weight.transpose();
        z.rowwise() += layer.bias;
        cache.inputs.push_back(std::move(h));
        const bool last = i + 1 == layers_.size();
        h = activate(last ? output_ : Activation::relu, z, scale_);
        cache.pre.push_back(std::move(z));
    }
    cache.output = h;
    return h;
}

Gradients DenseNet::backward(const ForwardCache& cache, const Matrix& d_output, Matrix* d_input) const {
    if (cache.pre.size() != layers_.size()) throw StructuralError("forward cache does not belong to this network");
    if (d_output.rows() != cache.output.rows() || d_output.cols() != cache.output.cols())
        throw StructuralError("output gradient has wrong shape");
    Gradients g;
    g.weight.resize(layers_.size());
    g.bias.resize(layers_.size());
    Matrix d_a = d_output;
    for (std::size_t k = layers_.size(); k-- > 0;) {
        const bool last = k + 1 == layers_.size();
        const Matrix& a = last ? cache.output : cache.inputs[k + 1];
        Matrix d_z = activation_backward(last ? output_ : Activation::relu, cache.pre[k], a, d_a, scale_);
        g.weight[k] = d_z.transpose() * cache.inputs[k];
        g.bias[k] = d_z.colwise().sum();
        if (k > 0 || d_input) d_a = d_z * layers_[k].weight;
    }
    if (d_input) *d_input = std::move(d_a);
    return g;
}

Gradients DenseNet::zero_gradients() const {
    Gradients g;
    for (const auto& layer : layers_) {
        g.weight.push_back(Matrix::Zero(layer.weight.rows(), layer.weight.cols()));
        g.bias.push_back(RowVector::Zero(layer.bias.size()));
    }
    return g;
}

std::size_t DenseNet::num_params() const {
    std::size_t n = 0;
    for (const auto& layer : layers_) n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
    return n;
}

std::vector<double> DenseNet::flat_params() const {
    std::vector<double> out;
    out.reserve(num_params());
    for (const auto& layer : layers_) {
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) out.push_back(layer.weight(r, c));
        for (Eigen::Index c = 0; c < layer.bias.size(); ++c) out.push_back(layer.bias(c));
    }
    return out;
}

void DenseNet::set_flat_params(std::span<const double> params) {
    if (params.size() != num_params()) throw StructuralError("parameter vector has wrong length");
    std::size_t k = 0;
    for (auto& layer : layers_) {
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = params[k++];
        for (Eigen::Index c = 0; c < layer.bias.size(); ++c) layer.bias(c) = params[k++];
    }
}

bool DenseNet::all_finite() const {
    for (const auto& layer : layers_)
        if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
    return true;
}

bool DenseNet::same_architecture(const DenseNet& other) const {
    return dims_ == other.dims_ && output_ == other.output_ && scale_ == other.scale_;
}

bool operator==(const DenseNet& a, const DenseNet& b) {
    if (!a.same_architecture(b)) return false;
    for (std::size_t i = 0; i < a.layers_.size(); ++i) {
        if (a.layers_[i].weight != b.layers_[i].weight) return false;
        if (a.layers_[i].bias != b.layers_[i].bias) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------

LossOutput output_loss(LossKind kind, const Matrix& outputs, const Matrix& targets) {
    const auto n = static_cast<double>(outputs.rows());
    if (outputs.rows() == 0) throw StructuralError("empty batch");
    LossOutput out;
    switch (kind) {
    case LossKind::mse: {
        if (targets.rows() != outputs.rows() || targets.cols() != outputs.cols())
            throw StructuralError("mse targets must match outputs");
        const Matrix diff = outputs - targets;
        const double count = static_cast<double>(diff.size());
        out.loss = diff.squaredNorm() / count;
        out.d_output = (2.0 / count) * diff;
        break;
    }
    case LossKind::neg_log_likelihood_gaussian: {
        if (targets.rows() != outputs.rows() || targets.cols() != outputs.cols())
            throw StructuralError("gaussian targets must match outputs");
        const Matrix diff = outputs - targets;
        out.loss = 0.5 * diff.squaredNorm() / n + 0.5 * static_cast<double>(outputs.cols()) * std::log(2.0 * M_PI);
        out.d_output = diff / n;
        break;
    }
    case LossKind::bce: {
        if (targets.rows() != outputs.rows() || targets.cols() != outputs.cols())
            throw StructuralError("bce targets must match outputs");
        const double count = static_cast<double>(outputs.size());
        double loss = 0.0;
        out.d_output.resize(outputs.rows(), outputs.cols());
        for (Eigen::Index i = 0; i < outputs.rows(); ++i) {
            for (Eigen::Index j = 0; j < outputs.cols(); ++j) {
                const double p = outputs(i, j);
                const double y = targets(i, j);
                if (!(p > 0.0 && p < 1.0)) throw StructuralError("bce needs outputs strictly inside (0, 1)");
                loss -= y * std::log(p) + (1.0 - y) * std::log1p(-p);
                out.d_output(i, j) = (p - y) / (p * (1.0 - p)) / count;
            }
        }
        out.loss = loss / count;
        break;
    }
    case LossKind::neg_mean_scalar: {
        if (outputs.cols() != 1) throw StructuralError("neg_mean_scalar needs a single output column");
        out.loss = -outputs.sum() / n;
        out.d_output = Matrix::Constant(outputs.rows(), 1, -1.0 / n);
        break;
    }
    case LossKind::cross_entropy: {
        if (targets.rows() != outputs.rows() || targets.cols() != 1)
            throw StructuralError("cross-entropy targets must be one class index per row");
        out.d_output.resize(outputs.rows(), outputs.cols());
        double loss = 0.0;
        for (Eigen::Index i = 0; i < outputs.rows(); ++i) {
            const auto label = static_cast<Eigen::Index>(std::llround(targets(i, 0)));
            if (label < 0 || label >= outputs.cols()) throw StructuralError("class index out of range");
            const double m = outputs.row(i).maxCoeff();
            const RowVector e = (outputs.row(i).array() - m).exp().matrix();
            const double z = e.sum();
            loss -= outputs(i, label) - m - std::log(z);
            out.d_output.row(i) = e / z / n;
            out.d_output(i, label) -= 1.0 / n;
        }
        out.loss = loss / n;
        break;
    }
    }
    return out;
}

LossAndGrad loss_and_grad(const DenseNet& net, const Batch& batch, LossKind kind) {
    if (!batch.inputs.allFinite()) throw ValidationError("batch inputs contain NaN or Inf");
    if (batch.inputs.rows() == 0) throw StructuralError("empty batch");
    ForwardCache cache;
    const Matrix outputs = net.forward(batch.inputs, cache);
    LossOutput lo = output_loss(kind, outputs, batch.targets);
    return {lo.loss, net.backward(cache, lo.d_output)};
}

// ---------------------------------------------------------------------------

AdamState AdamState::for_net(const DenseNet& net, double lr) {
    if (!(lr > 0.0)) throw ValidationError("learning rate must be positive");
    AdamState s;
    s.m = net.zero_gradients();
    s.v = net.zero_gradients();
    s.lr = lr;
    return s;
}

void adam_update(DenseNet& net, const Gradients& grads, AdamState& adam) {
    auto& layers = net.layers();
    if (!grads.same_shape(adam.m) || grads.weight.size() != layers.size())
        throw StructuralError("gradient shape does not match network/optimizer");
    ++adam.step;
    const double c1 = 1.0 - std::pow(adam.beta1, static_cast<double>(adam.step));
    const double c2 = 1.0 - std::pow(adam.beta2, static_cast<double>(adam.step));
    const double step = adam.lr / c1;
    const double root_c2 = std::sqrt(c2);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        adam.m.weight[i] = adam.beta1 * adam.m.weight[i] + (1.0 - adam.beta1) * grads.weight[i];
        adam.v.weight[i] = adam.beta2 * adam.v.weight[i] + (1.0 - adam.beta2) * grads.weight[i].cwiseAbs2();
        layers[i].weight.array() -=
            step * adam.m.weight[i].array() / (adam.v.weight[i].array().sqrt() / root_c2 + adam.eps);

        adam.m.bias[i] = adam.beta1 * adam.m.bias[i] + (1.0 - adam.beta1) * grads.bias[i];
        adam.v.bias[i] = adam.beta2 * adam.v.bias[i] + (1.0 - adam.beta2) * grads.bias[i].cwiseAbs2();
        layers[i].bias.array() -= step * adam.m.bias[i].array() / (adam.v.bias[i].array().sqrt() / root_c2 + adam.eps);
    }
}

void soft_update(DenseNet& target, const DenseNet& online, double tau) {
    if (!target.same_architecture(online)) throw StructuralError("soft update between different architectures");
    if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("tau must lie in [0, 1]");
    auto& dst = target.layers();
    const auto& src = online.layers();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i].weight = tau * src[i].weight + (1.0 - tau) * dst[i].weight;
        dst[i].bias = tau * src[i].bias + (1.0 - tau) * dst[i].bias;
    }
}

double max_relative_error(std::span<const double> analytic, std::span<const double> numeric) {
    if (analytic.size() != numeric.size()) throw StructuralError("gradient vectors differ in length");
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double denom = std::max(std::abs(numeric[i]), 1e-6);
        worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
    }
    return worst;
}

double grad_check(const DenseNet& net, const std::function<double(const DenseNet&)>& loss, const Gradients& analytic,
                  double h, std::uint64_t seed, std::size_t max_params) {
    if (!(h > 0.0)) throw ValidationError("finite-difference step must be positive");
    const std::vector<double> base = net.flat_params();
    const std::vector<double> full = analytic.flat();
    if (full.size() != base.size()) throw StructuralError("analytic gradient does not match the network");

    std::vector<std::size_t> indices(base.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    if (indices.size() > max_params) {
        Rng rng(seed);
        for (std::size_t i = 0; i < max_params; ++i) std::swap(indices[i], indices[i + rng.index(indices.size() - i)]);
        indices.resize(max_params);
    }

    DenseNet probe = net;
    std::vector<double> params = base;
    std::vector<double> a, n;
    for (std::size_t idx : indices) {
        params[idx] = base[idx] + h;
        probe.set_flat_params(params);
        const double up = loss(probe);
        params[idx] = base[idx] - h;
        probe.set_flat_params(params);
        const double down = loss(probe);
        params[idx] = base[idx];
        a.push_back(full[idx]);
        n.push_back((up - down) / (2.0 * h));
    }
    return max_relative_error(a, n);
}

double grad_check(const DenseNet& net, const Batch& batch, LossKind kind, double h, std::uint64_t seed) {
    const LossAndGrad lg = loss_and_grad(net, batch, kind);
    return grad_check(
        net, [&](const DenseNet& probe) { return output_loss(kind, probe.forward(batch.inputs), batch.targets).loss; },
        lg.grads, h, seed);
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const DenseNet& net) {
    nlohmann::json layers = nlohmann::json::array();
    std::vector<std::string> activations;
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
        const auto& layer = net.layers()[i];
        std::vector<double> w;
        w.reserve(static_cast<std::size_t>(layer.weight.size()));
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) w.push_back(layer.weight(r, c));
        std::vector<double> b(layer.bias.data(), layer.bias.data() + layer.bias.size());
        layers.push_back({{"weight", w}, {"bias", b}});
        activations.push_back(i + 1 == net.layers().size() ? to_string(net.output_activation()) : "relu");
    }
    return {{"layer_dims", net.layer_dims()},
            {"activations", activations},
            {"output_scale", net.output_scale()},
            {"layers", layers}};
}

DenseNet net_from_json(const nlohmann::json& j) {
    const auto dims = j.at("layer_dims").get<std::vector<int>>();
    const auto activations = j.at("activations").get<std::vector<std::string>>();
    if (activations.empty() || activations.size() + 1 != dims.size())
        throw StructuralError("checkpoint activations do not match layer count");
    DenseNet net(dims, parse_activation(activations.back()), j.value("output_scale", 1.0));
    const auto& layers = j.at("layers");
    if (layers.size() != net.layers().size()) throw StructuralError("checkpoint has wrong number of layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        auto& layer = net.layers()[i];
        const auto w = layers[i].at("weight").get<std::vector<double>>();
        const auto b = layers[i].at("bias").get<std::vector<double>>();
        if (w.size() != static_cast<std::size_t>(layer.weight.size()) ||
            b.size() != static_cast<std::size_t>(layer.bias.size()))
            throw StructuralError("checkpoint layer has wrong size");
        std::size_t k = 0;
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = w[k++];
        for (Eigen::Index c = 0; c < layer.bias.size(); ++c) layer.bias(c) = b[static_cast<std::size_t>(c)];
    }
    return net;
}

} // namespace bcdp::nn
