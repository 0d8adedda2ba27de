#pragma once

#include <cstdint>
#include <vector>

#include "operon/rng.hpp"
#include "operon/tensor.hpp"

namespace operon {

enum class Activation { kReLU, kTanh, kIdentity };

/// Fully connected layer computing activation(x * W^T + b) over a batch,
/// with reverse-mode gradient accumulation into weight_grad / bias_grad.
class DenseLayer {
  public:
    DenseLayer(std::size_t in_dim, std::size_t out_dim, Activation act);

    /// Glorot-uniform weights, zero bias.
    void init_glorot(Rng& rng);

    /// input is batch×in; returns batch×out and caches input/preactivation.
    Tensor2 forward(const Tensor2& input);

    /// upstream is dLoss/dOutput (batch×out). Accumulates parameter
    /// gradients and returns dLoss/dInput. Requires a preceding forward.
    Tensor2 backward(const Tensor2& upstream);

    void zero_grad();

    std::size_t in_dim() const { return in_dim_; }
    std::size_t out_dim() const { return out_dim_; }
    std::size_t parameter_count() const { return in_dim_ * out_dim_ + out_dim_; }
    Activation activation() const { return activation_; }

    Tensor2 weights;      // out×in
    Tensor2 bias;         // 1×out
    Tensor2 weight_grad;  // out×in
    Tensor2 bias_grad;    // 1×out

  private:
    std::size_t in_dim_;
    std::size_t out_dim_;
    Activation activation_;
    Tensor2 cached_input_;
    Tensor2 cached_preact_;
    bool has_forward_ = false;
};

/// A plain stack of dense layers applied in sequence.
Tensor2 stack_forward(std::vector<DenseLayer>& layers, const Tensor2& input);
Tensor2 stack_backward(std::vector<DenseLayer>& layers, const Tensor2& upstream);

struct ParamRef {
    Tensor2* value = nullptr;
    Tensor2* grad = nullptr;
};

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam with bias correction over a fixed set of parameter tensors.
/// step() applies the update from the accumulated gradients and zeroes them.
class Adam {
  public:
    Adam(AdamConfig config, std::vector<ParamRef> params);

    void step();
    std::uint64_t step_count() const { return step_count_; }
    const AdamConfig& config() const { return config_; }

  private:
    AdamConfig config_;
    std::vector<ParamRef> params_;
    std::vector<Tensor2> first_moment_;
    std::vector<Tensor2> second_moment_;
    std::uint64_t step_count_ = 0;
};

}  // namespace operon
