#include "operon/models.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "operon/rng.hpp"

namespace operon {

const char* kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::kFnn: return "fnn";
        case ModelKind::kDeepOnetConcat: return "deeponet";
        case ModelKind::kEDeepOnet: return "edeeponet";
    }
    throw std::logic_error("kind_name: unknown kind");
}

ModelKind kind_from_name(const std::string& name) {
    if (name == "fnn") return ModelKind::kFnn;
    if (name == "deeponet") return ModelKind::kDeepOnetConcat;
    if (name == "edeeponet") return ModelKind::kEDeepOnet;
    throw std::invalid_argument("unknown model kind '" + name +
                                "' (valid: fnn, deeponet, edeeponet)");
}

void ModelSpec::validate() const {
    if (sensor_count < 1) throw std::invalid_argument("ModelSpec: sensor_count must be >= 1");
    if (query_dim < 1) throw std::invalid_argument("ModelSpec: query_dim must be >= 1");
    auto check_widths = [](const std::vector<std::size_t>& widths, const char* what) {
        for (std::size_t w : widths) {
            if (w < 1) throw std::invalid_argument(std::string("ModelSpec: ") + what +
                                                   " widths must be >= 1");
        }
    };
    switch (kind) {
        case ModelKind::kFnn:
            check_widths(fnn_widths, "fnn");
            break;
        case ModelKind::kDeepOnetConcat:
        case ModelKind::kEDeepOnet:
            if (latent_dim < 1) throw std::invalid_argument("ModelSpec: latent_dim must be >= 1");
            check_widths(branch_widths, "branch");
            check_widths(trunk_widths, "trunk");
            if (kind == ModelKind::kEDeepOnet && n_branches < 2) {
                throw std::invalid_argument("ModelSpec: EDeepONet needs n_branches >= 2");
            }
            break;
    }
}

std::string ModelSpec::to_json() const {
    nlohmann::json j;
    j["kind"] = kind_name(kind);
    j["sensor_count"] = sensor_count;
    j["query_dim"] = query_dim;
    j["n_branches"] = n_branches;
    j["branch_widths"] = branch_widths;
    j["trunk_widths"] = trunk_widths;
    j["latent_dim"] = latent_dim;
    j["fnn_widths"] = fnn_widths;
    j["output_bias"] = output_bias;
    j["seed"] = seed;
    return j.dump();
}

ModelSpec ModelSpec::from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    ModelSpec spec;
    spec.kind = kind_from_name(j.at("kind").get<std::string>());
    spec.sensor_count = j.at("sensor_count").get<std::size_t>();
    spec.query_dim = j.at("query_dim").get<std::size_t>();
    spec.n_branches = j.at("n_branches").get<std::size_t>();
    spec.branch_widths = j.at("branch_widths").get<std::vector<std::size_t>>();
    spec.trunk_widths = j.at("trunk_widths").get<std::vector<std::size_t>>();
    spec.latent_dim = j.at("latent_dim").get<std::size_t>();
    spec.fnn_widths = j.at("fnn_widths").get<std::vector<std::size_t>>();
    spec.output_bias = j.at("output_bias").get<bool>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.validate();
    return spec;
}

std::string ModelSpec::digest() const {
    const std::string text = to_json();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

// Layer dimensions of one dense stack: in -> hidden widths -> out.
std::vector<std::pair<std::size_t, std::size_t>> stack_dims(std::size_t in,
                                                            const std::vector<std::size_t>& hidden,
                                                            std::size_t out) {
    std::vector<std::pair<std::size_t, std::size_t>> dims;
    std::size_t prev = in;
    for (std::size_t w : hidden) {
        dims.emplace_back(prev, w);
        prev = w;
    }
    dims.emplace_back(prev, out);
    return dims;
}

std::vector<DenseLayer> build_stack(std::size_t in, const std::vector<std::size_t>& hidden,
                                    std::size_t out, Rng& rng) {
    std::vector<DenseLayer> layers;
    const auto dims = stack_dims(in, hidden, out);
    layers.reserve(dims.size());
    for (std::size_t i = 0; i < dims.size(); ++i) {
        const bool last = i + 1 == dims.size();
        layers.emplace_back(dims[i].first, dims[i].second,
                            last ? Activation::kIdentity : Activation::kReLU);
        layers.back().init_glorot(rng);
    }
    return layers;
}

std::size_t stack_param_count(std::size_t in, const std::vector<std::size_t>& hidden,
                              std::size_t out) {
    std::size_t total = 0;
    for (const auto& [i, o] : stack_dims(in, hidden, out)) total += i * o + o;
    return total;
}

}  // namespace

std::size_t parameter_count(const ModelSpec& spec) {
    spec.validate();
    const std::size_t m = spec.sensor_count;
    switch (spec.kind) {
        case ModelKind::kFnn:
            return stack_param_count(2 * m + spec.query_dim, spec.fnn_widths, 1);
        case ModelKind::kDeepOnetConcat:
            return stack_param_count(2 * m, spec.branch_widths, spec.latent_dim) +
                   stack_param_count(spec.query_dim, spec.trunk_widths, spec.latent_dim) +
                   (spec.output_bias ? 1 : 0);
        case ModelKind::kEDeepOnet:
            return spec.n_branches * stack_param_count(m, spec.branch_widths, spec.latent_dim) +
                   stack_param_count(spec.query_dim, spec.trunk_widths, spec.latent_dim) +
                   (spec.output_bias ? 1 : 0);
    }
    throw std::logic_error("parameter_count: unknown kind");
}

OperatorModel::OperatorModel(ModelSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    Rng rng(spec_.seed);
    const std::size_t m = spec_.sensor_count;
    switch (spec_.kind) {
        case ModelKind::kFnn:
            fnn_ = build_stack(2 * m + spec_.query_dim, spec_.fnn_widths, 1, rng);
            break;
        case ModelKind::kDeepOnetConcat:
            branches_.push_back(build_stack(2 * m, spec_.branch_widths, spec_.latent_dim, rng));
            trunk_ = build_stack(spec_.query_dim, spec_.trunk_widths, spec_.latent_dim, rng);
            break;
        case ModelKind::kEDeepOnet:
            for (std::size_t b = 0; b < spec_.n_branches; ++b) {
                branches_.push_back(build_stack(m, spec_.branch_widths, spec_.latent_dim, rng));
            }
            trunk_ = build_stack(spec_.query_dim, spec_.trunk_widths, spec_.latent_dim, rng);
            break;
    }
}

std::size_t OperatorModel::parameter_count() const { return operon::parameter_count(spec_); }

std::size_t OperatorModel::n_function_inputs() const {
    return spec_.kind == ModelKind::kEDeepOnet ? spec_.n_branches : 2;
}

Tensor2 OperatorModel::forward(const std::vector<const Tensor2*>& functions,
                               const Tensor2& queries) {
    if (functions.size() != n_function_inputs()) {
        throw std::invalid_argument("forward: expected " + std::to_string(n_function_inputs()) +
                                    " input functions, got " + std::to_string(functions.size()));
    }
    const std::size_t batch = queries.rows();
    for (const Tensor2* f : functions) {
        if (f->rows() != batch || f->cols() != spec_.sensor_count) {
            throw std::invalid_argument("forward: function input " + f->shape_string() +
                                        " does not match batch " + std::to_string(batch) +
                                        " x m " + std::to_string(spec_.sensor_count));
        }
    }
    if (queries.cols() != spec_.query_dim) {
        throw std::invalid_argument("forward: query width " + std::to_string(queries.cols()) +
                                    " != " + std::to_string(spec_.query_dim));
    }

    Tensor2 out(batch, 1);
    switch (spec_.kind) {
        case ModelKind::kFnn: {
            const Tensor2 input = hstack({functions[0], functions[1], &queries});
            out = stack_forward(fnn_, input);
            break;
        }
        case ModelKind::kDeepOnetConcat: {
            const Tensor2 input = hstack({functions[0], functions[1]});
            branch_outputs_.assign(1, stack_forward(branches_[0], input));
            trunk_output_ = stack_forward(trunk_, queries);
            fused_ = branch_outputs_[0];
            break;
        }
        case ModelKind::kEDeepOnet: {
            branch_outputs_.clear();
            branch_outputs_.reserve(spec_.n_branches);
            for (std::size_t b = 0; b < spec_.n_branches; ++b) {
                branch_outputs_.push_back(stack_forward(branches_[b], *functions[b]));
            }
            trunk_output_ = stack_forward(trunk_, queries);
            fused_ = branch_outputs_[0];
            for (std::size_t b = 1; b < spec_.n_branches; ++b) {
                const Tensor2& g = branch_outputs_[b];
                for (std::size_t i = 0; i < fused_.size(); ++i) fused_.data()[i] *= g.data()[i];
            }
            break;
        }
    }
    if (spec_.kind != ModelKind::kFnn) {
        const double b0 = spec_.output_bias ? output_bias_value_(0, 0) : 0.0;
        for (std::size_t i = 0; i < batch; ++i) {
            const double* f = fused_.row(i);
            const double* t = trunk_output_.row(i);
            double s = 0.0;
            for (std::size_t k = 0; k < spec_.latent_dim; ++k) s += f[k] * t[k];
            out(i, 0) = s + b0;
        }
    }
    has_forward_ = true;
    return out;
}

void OperatorModel::backward(const Tensor2& upstream) {
    if (!has_forward_) throw std::logic_error("backward called before forward");
    if (upstream.cols() != 1) throw std::invalid_argument("backward: upstream must be batch x 1");

    if (spec_.kind == ModelKind::kFnn) {
        stack_backward(fnn_, upstream);
        return;
    }

    const std::size_t batch = upstream.rows();
    const std::size_t p = spec_.latent_dim;
    if (trunk_output_.rows() != batch) {
        throw std::invalid_argument("backward: upstream batch " + std::to_string(batch) +
                                    " does not match forward batch " +
                                    std::to_string(trunk_output_.rows()));
    }

    // d<g, f> . trunk side: upstream broadcast times fused latent
    Tensor2 trunk_grad(batch, p);
    for (std::size_t i = 0; i < batch; ++i) {
        const double up = upstream(i, 0);
        const double* f = fused_.row(i);
        double* g = trunk_grad.row(i);
        for (std::size_t k = 0; k < p; ++k) g[k] = up * f[k];
    }
    stack_backward(trunk_, trunk_grad);

    if (spec_.kind == ModelKind::kDeepOnetConcat) {
        Tensor2 branch_grad(batch, p);
        for (std::size_t i = 0; i < batch; ++i) {
            const double up = upstream(i, 0);
            const double* t = trunk_output_.row(i);
            double* g = branch_grad.row(i);
            for (std::size_t k = 0; k < p; ++k) g[k] = up * t[k];
        }
        stack_backward(branches_[0], branch_grad);
    } else {
        // leave-one-out products: dG_b = upstream ⊙ trunk ⊙ prod_{j!=b} G_j
        const std::size_t n = spec_.n_branches;
        std::vector<Tensor2> prefix(n), suffix(n);
        prefix[0] = Tensor2(batch, p, 1.0);
        for (std::size_t b = 1; b < n; ++b) {
            prefix[b] = prefix[b - 1];
            const Tensor2& g = branch_outputs_[b - 1];
            for (std::size_t i = 0; i < prefix[b].size(); ++i) prefix[b].data()[i] *= g.data()[i];
        }
        suffix[n - 1] = Tensor2(batch, p, 1.0);
        for (std::size_t b = n - 1; b-- > 0;) {
            suffix[b] = suffix[b + 1];
            const Tensor2& g = branch_outputs_[b + 1];
            for (std::size_t i = 0; i < suffix[b].size(); ++i) suffix[b].data()[i] *= g.data()[i];
        }
        for (std::size_t b = 0; b < n; ++b) {
            Tensor2 branch_grad(batch, p);
            for (std::size_t i = 0; i < batch; ++i) {
                const double up = upstream(i, 0);
                const double* t = trunk_output_.row(i);
                const double* pre = prefix[b].row(i);
                const double* suf = suffix[b].row(i);
                double* g = branch_grad.row(i);
                for (std::size_t k = 0; k < p; ++k) g[k] = up * t[k] * pre[k] * suf[k];
            }
            stack_backward(branches_[b], branch_grad);
        }
    }

    if (spec_.output_bias) {
        double s = 0.0;
        for (std::size_t i = 0; i < batch; ++i) s += upstream(i, 0);
        output_bias_grad_(0, 0) += s;
    }
}

std::vector<ParamRef> OperatorModel::parameters() {
    std::vector<ParamRef> refs;
    for (auto& branch : branches_) {
        for (DenseLayer& layer : branch) {
            refs.push_back({&layer.weights, &layer.weight_grad});
            refs.push_back({&layer.bias, &layer.bias_grad});
        }
    }
    for (DenseLayer& layer : trunk_) {
        refs.push_back({&layer.weights, &layer.weight_grad});
        refs.push_back({&layer.bias, &layer.bias_grad});
    }
    for (DenseLayer& layer : fnn_) {
        refs.push_back({&layer.weights, &layer.weight_grad});
        refs.push_back({&layer.bias, &layer.bias_grad});
    }
    if (spec_.kind != ModelKind::kFnn && spec_.output_bias) {
        refs.push_back({&output_bias_value_, &output_bias_grad_});
    }
    return refs;
}

void OperatorModel::zero_grad() {
    for (auto& branch : branches_) {
        for (DenseLayer& layer : branch) layer.zero_grad();
    }
    for (DenseLayer& layer : trunk_) layer.zero_grad();
    for (DenseLayer& layer : fnn_) layer.zero_grad();
    output_bias_grad_.set_zero();
}

std::vector<double> OperatorModel::flatten_parameters() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    auto* self = const_cast<OperatorModel*>(this);
    for (const ParamRef& ref : self->parameters()) {
        const Tensor2& t = *ref.value;
        flat.insert(flat.end(), t.data(), t.data() + t.size());
    }
    return flat;
}

void OperatorModel::load_parameters(const std::vector<double>& flat) {
    if (flat.size() != parameter_count()) {
        throw std::invalid_argument("load_parameters: expected " +
                                    std::to_string(parameter_count()) + " values, got " +
                                    std::to_string(flat.size()));
    }
    std::size_t offset = 0;
    for (const ParamRef& ref : parameters()) {
        Tensor2& t = *ref.value;
        for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = flat[offset + i];
        offset += t.size();
    }
}

namespace {
constexpr char kCheckpointMagic[8] = {'E', 'D', 'O', 'N', 'M', 'D', 'L', '1'};
}

void OperatorModel::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    const std::string spec_json = spec_.to_json();
    const std::uint32_t len = static_cast<std::uint32_t>(spec_json.size());
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(spec_json.data(), static_cast<std::streamsize>(spec_json.size()));
    const std::vector<double> flat = flatten_parameters();
    const std::uint64_t count = flat.size();
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    out.write(reinterpret_cast<const char*>(flat.data()),
              static_cast<std::streamsize>(flat.size() * sizeof(double)));
    if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

OperatorModel OperatorModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
        throw std::runtime_error("not a model checkpoint (bad magic): " + path);
    }
    std::uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string spec_json(len, '\0');
    in.read(spec_json.data(), len);
    std::uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    std::vector<double> flat(count);
    in.read(reinterpret_cast<char*>(flat.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    OperatorModel model(ModelSpec::from_json(spec_json));
    model.load_parameters(flat);
    return model;
}

std::vector<DenseLayer>& OperatorModel::branch(std::size_t i) {
    if (i >= branches_.size()) throw std::invalid_argument("branch index out of range");
    return branches_[i];
}

std::vector<DenseLayer>& OperatorModel::trunk() { return trunk_; }
std::vector<DenseLayer>& OperatorModel::fnn() { return fnn_; }
Tensor2& OperatorModel::output_bias() { return output_bias_value_; }

const Tensor2& OperatorModel::branch_output(std::size_t i) const {
    if (!has_forward_ || i >= branch_outputs_.size()) {
        throw std::logic_error("branch_output: no forward pass cached");
    }
    return branch_outputs_[i];
}

const Tensor2& OperatorModel::trunk_output() const {
    if (!has_forward_) throw std::logic_error("trunk_output: no forward pass cached");
    return trunk_output_;
}

namespace {

Tensor2 row_tensor(const std::vector<double>& v) {
    Tensor2 t(1, v.size());
    for (std::size_t i = 0; i < v.size(); ++i) t(0, i) = v[i];
    return t;
}

}  // namespace

double forward_fnn(OperatorModel& model, const std::vector<double>& u,
                   const std::vector<double>& v, const std::vector<double>& y) {
    if (model.spec().kind != ModelKind::kFnn) {
        throw std::invalid_argument("forward_fnn called on a non-FNN model");
    }
    const Tensor2 tu = row_tensor(u), tv = row_tensor(v), ty = row_tensor(y);
    return model.forward({&tu, &tv}, ty)(0, 0);
}

double forward_deeponet_concat(OperatorModel& model, const std::vector<double>& u,
                               const std::vector<double>& v, const std::vector<double>& y) {
    if (model.spec().kind != ModelKind::kDeepOnetConcat) {
        throw std::invalid_argument("forward_deeponet_concat called on the wrong model kind");
    }
    const Tensor2 tu = row_tensor(u), tv = row_tensor(v), ty = row_tensor(y);
    return model.forward({&tu, &tv}, ty)(0, 0);
}

double forward_edeeponet(OperatorModel& model,
                         const std::vector<std::vector<double>>& functions,
                         const std::vector<double>& y) {
    if (model.spec().kind != ModelKind::kEDeepOnet) {
        throw std::invalid_argument("forward_edeeponet called on the wrong model kind");
    }
    std::vector<Tensor2> rows;
    rows.reserve(functions.size());
    for (const auto& f : functions) rows.push_back(row_tensor(f));
    std::vector<const Tensor2*> ptrs;
    for (const Tensor2& t : rows) ptrs.push_back(&t);
    const Tensor2 ty = row_tensor(y);
    return model.forward(ptrs, ty)(0, 0);
}

ModelSpec match_parameter_counts(const ModelSpec& reference, ModelKind target_kind) {
    const std::size_t ref_count = parameter_count(reference);

    auto candidate = [&](std::size_t w) {
        ModelSpec spec = reference;
        spec.kind = target_kind;
        switch (target_kind) {
            case ModelKind::kFnn:
                spec.fnn_widths.assign(3, w);
                break;
            case ModelKind::kDeepOnetConcat:
            case ModelKind::kEDeepOnet:
                spec.branch_widths.assign(2, w);
                spec.trunk_widths.assign(2, w);
                spec.latent_dim = w;
                if (target_kind == ModelKind::kEDeepOnet && spec.n_branches < 2) {
                    spec.n_branches = 2;
                }
                break;
        }
        return spec;
    };

    constexpr std::size_t kMaxWidth = 8192;
    ModelSpec best = candidate(1);
    std::size_t best_diff = static_cast<std::size_t>(-1);
    for (std::size_t w = 1; w <= kMaxWidth; ++w) {
        const ModelSpec spec = candidate(w);
        const std::size_t count = parameter_count(spec);
        const std::size_t diff = count > ref_count ? count - ref_count : ref_count - count;
        if (diff < best_diff) {
            best_diff = diff;
            best = spec;
        }
        if (count > ref_count) break;  // counts grow monotonically in w
    }
    const double tolerance = 0.05 * static_cast<double>(ref_count);
    if (static_cast<double>(best_diff) > tolerance) {
        throw std::runtime_error("match_parameter_counts: no " +
                                 std::string(kind_name(target_kind)) + " width within 5% of " +
                                 std::to_string(ref_count) + " parameters (closest: " +
                                 std::to_string(parameter_count(best)) + ")");
    }
    return best;
}

}  // namespace operon
