#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "operon/nn.hpp"
#include "operon/tensor.hpp"

namespace operon {

enum class ModelKind { kFnn, kDeepOnetConcat, kEDeepOnet };

const char* kind_name(ModelKind kind);
ModelKind kind_from_name(const std::string& name);

/// Architecture descriptor; together with the seed it rebuilds a model
/// bit-identically.
struct ModelSpec {
    ModelKind kind = ModelKind::kEDeepOnet;
    std::size_t sensor_count = 101;  // sensors per input function
    std::size_t query_dim = 2;       // y = (x, t)
    std::size_t n_branches = 2;      // EDeepOnet only
    std::vector<std::size_t> branch_widths = {64, 64};
    std::vector<std::size_t> trunk_widths = {64, 64};
    std::size_t latent_dim = 64;  // p
    std::vector<std::size_t> fnn_widths = {96, 96, 96};
    bool output_bias = true;
    std::uint64_t seed = 0;

    void validate() const;
    std::string to_json() const;
    static ModelSpec from_json(const std::string& text);
    /// FNV-1a hash of the canonical JSON encoding.
    std::string digest() const;
};

/// Exact parameter count implied by a spec: sum of in*out+out over all
/// dense layers, plus 1 for the output bias of branch/trunk models.
std::size_t parameter_count(const ModelSpec& spec);

/// One of the three competing architectures behind a common interface.
/// Forward consumes one matrix per input function (batch×m each) plus the
/// query matrix (batch×query_dim) and returns batch×1 predictions.
class OperatorModel {
  public:
    explicit OperatorModel(ModelSpec spec);

    const ModelSpec& spec() const { return spec_; }
    std::size_t parameter_count() const;

    Tensor2 forward(const std::vector<const Tensor2*>& functions, const Tensor2& queries);

    /// upstream = dLoss/dPrediction, batch×1. Accumulates into all
    /// parameter gradients; requires a preceding forward on the batch.
    void backward(const Tensor2& upstream);

    std::vector<ParamRef> parameters();
    void zero_grad();

    std::vector<double> flatten_parameters() const;
    void load_parameters(const std::vector<double>& flat);

    /// Versioned binary checkpoint; byte-exact round trip.
    void save(const std::string& path) const;
    static OperatorModel load(const std::string& path);

    std::size_t n_function_inputs() const;

    // direct access to the sub-networks (tests, analysis, surgery)
    std::vector<DenseLayer>& branch(std::size_t i);
    std::vector<DenseLayer>& trunk();
    std::vector<DenseLayer>& fnn();
    Tensor2& output_bias();
    const Tensor2& branch_output(std::size_t i) const;
    const Tensor2& trunk_output() const;

  private:
    ModelSpec spec_;
    std::vector<std::vector<DenseLayer>> branches_;
    std::vector<DenseLayer> trunk_;
    std::vector<DenseLayer> fnn_;
    Tensor2 output_bias_value_{1, 1};
    Tensor2 output_bias_grad_{1, 1};

    // forward caches
    std::vector<Tensor2> branch_outputs_;
    Tensor2 trunk_output_;
    Tensor2 fused_;
    bool has_forward_ = false;
};

/// Single-sample conveniences mirroring the model zoo's math; throw
/// std::invalid_argument when called on the wrong kind.
double forward_fnn(OperatorModel& model, const std::vector<double>& u,
                   const std::vector<double>& v, const std::vector<double>& y);
double forward_deeponet_concat(OperatorModel& model, const std::vector<double>& u,
                               const std::vector<double>& v, const std::vector<double>& y);
double forward_edeeponet(OperatorModel& model,
                         const std::vector<std::vector<double>>& functions,
                         const std::vector<double>& y);

/// Find a spec of target_kind whose parameter count is within ±5% of the
/// reference's, scanning the shared hidden width upward from 1. Throws
/// std::runtime_error (reporting the closest miss) if no width lands
/// inside the window.
ModelSpec match_parameter_counts(const ModelSpec& reference, ModelKind target_kind);

}  // namespace operon
