#include "operon/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace operon {

DenseLayer::DenseLayer(std::size_t in_dim, std::size_t out_dim, Activation act)
    : weights(out_dim, in_dim),
      bias(1, out_dim),
      weight_grad(out_dim, in_dim),
      bias_grad(1, out_dim),
      in_dim_(in_dim),
      out_dim_(out_dim),
      activation_(act) {
    if (in_dim == 0 || out_dim == 0) throw std::invalid_argument("DenseLayer: zero dimension");
}

void DenseLayer::init_glorot(Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in_dim_ + out_dim_));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t i = 0; i < weights.size(); ++i) weights.data()[i] = dist(rng);
    bias.set_zero();
}

Tensor2 DenseLayer::forward(const Tensor2& input) {
    if (input.cols() != in_dim_) {
        throw std::invalid_argument("DenseLayer::forward: input " + input.shape_string() +
                                    " incompatible with weights " + weights.shape_string());
    }
    cached_input_ = input;
    Tensor2 z = matmul_nt(input, weights);
    for (std::size_t i = 0; i < z.rows(); ++i) {
        double* zr = z.row(i);
        const double* b = bias.data();
        for (std::size_t j = 0; j < out_dim_; ++j) zr[j] += b[j];
    }
    cached_preact_ = z;
    has_forward_ = true;
    switch (activation_) {
        case Activation::kReLU:
            for (std::size_t i = 0; i < z.size(); ++i) {
                if (z.data()[i] < 0.0) z.data()[i] = 0.0;
            }
            break;
        case Activation::kTanh:
            for (std::size_t i = 0; i < z.size(); ++i) z.data()[i] = std::tanh(z.data()[i]);
            break;
        case Activation::kIdentity:
            break;
    }
    return z;
}

Tensor2 DenseLayer::backward(const Tensor2& upstream) {
    if (!has_forward_) {
        throw std::logic_error("DenseLayer::backward called before forward");
    }
    if (upstream.rows() != cached_preact_.rows() || upstream.cols() != out_dim_) {
        throw std::invalid_argument("DenseLayer::backward: upstream " + upstream.shape_string() +
                                    " does not match output " + cached_preact_.shape_string());
    }
    // dz = upstream ⊙ activation'(preactivation)
    Tensor2 dz = upstream;
    switch (activation_) {
        case Activation::kReLU:
            for (std::size_t i = 0; i < dz.size(); ++i) {
                if (cached_preact_.data()[i] <= 0.0) dz.data()[i] = 0.0;
            }
            break;
        case Activation::kTanh:
            for (std::size_t i = 0; i < dz.size(); ++i) {
                const double t = std::tanh(cached_preact_.data()[i]);
                dz.data()[i] *= 1.0 - t * t;
            }
            break;
        case Activation::kIdentity:
            break;
    }
    // accumulate: dW += dz^T * x, db += column sums of dz
    Tensor2 dw = matmul_tn(dz, cached_input_);
    for (std::size_t i = 0; i < weight_grad.size(); ++i) weight_grad.data()[i] += dw.data()[i];
    for (std::size_t i = 0; i < dz.rows(); ++i) {
        const double* r = dz.row(i);
        double* g = bias_grad.data();
        for (std::size_t j = 0; j < out_dim_; ++j) g[j] += r[j];
    }
    return matmul(dz, weights);
}

void DenseLayer::zero_grad() {
    weight_grad.set_zero();
    bias_grad.set_zero();
}

Tensor2 stack_forward(std::vector<DenseLayer>& layers, const Tensor2& input) {
    Tensor2 x = input;
    for (DenseLayer& layer : layers) x = layer.forward(x);
    return x;
}

Tensor2 stack_backward(std::vector<DenseLayer>& layers, const Tensor2& upstream) {
    Tensor2 g = upstream;
    for (auto it = layers.rbegin(); it != layers.rend(); ++it) g = it->backward(g);
    return g;
}

Adam::Adam(AdamConfig config, std::vector<ParamRef> params)
    : config_(config), params_(std::move(params)) {
    if (config_.lr < 0.0) throw std::invalid_argument("Adam: negative learning rate");
    first_moment_.reserve(params_.size());
    second_moment_.reserve(params_.size());
    for (const ParamRef& p : params_) {
        first_moment_.emplace_back(p.value->rows(), p.value->cols());
        second_moment_.emplace_back(p.value->rows(), p.value->cols());
    }
}

void Adam::step() {
    ++step_count_;
    const double t = static_cast<double>(step_count_);
    const double bc1 = 1.0 - std::pow(config_.beta1, t);
    const double bc2 = 1.0 - std::pow(config_.beta2, t);
    for (std::size_t k = 0; k < params_.size(); ++k) {
        Tensor2& value = *params_[k].value;
        Tensor2& grad = *params_[k].grad;
        Tensor2& m = first_moment_[k];
        Tensor2& v = second_moment_[k];
        if (value.rows() != m.rows() || value.cols() != m.cols() ||
            grad.rows() != m.rows() || grad.cols() != m.cols()) {
            throw std::logic_error("Adam::step: parameter/moment shape mismatch at index " +
                                   std::to_string(k));
        }
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double g = grad.data()[i];
            m.data()[i] = config_.beta1 * m.data()[i] + (1.0 - config_.beta1) * g;
            v.data()[i] = config_.beta2 * v.data()[i] + (1.0 - config_.beta2) * g * g;
            const double m_hat = m.data()[i] / bc1;
            const double v_hat = v.data()[i] / bc2;
            value.data()[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
        }
        grad.set_zero();
    }
}

}  // namespace operon
