#include "operon/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "operon/log.hpp"
#include "operon/rng.hpp"

namespace operon {

const char* problem_name(Problem problem) {
    switch (problem) {
        case Problem::kDiffusion: return "diffusion";
        case Problem::kAdvectionDiffusion: return "advdiff";
    }
    throw std::logic_error("problem_name: unknown problem");
}

Problem problem_from_name(const std::string& name) {
    if (name == "diffusion") return Problem::kDiffusion;
    if (name == "advdiff") return Problem::kAdvectionDiffusion;
    throw std::invalid_argument("unknown problem '" + name + "' (valid: diffusion, advdiff)");
}

GenerationParams GenerationParams::defaults_for(Problem problem) {
    GenerationParams params;
    params.coeff_base = problem == Problem::kDiffusion ? 0.1 : 1.0;
    return params;
}

std::string GenerationParams::to_json() const {
    nlohmann::json j;
    j["sensor_count"] = sensor_count;
    j["grid"] = {{"nx", grid.nx}, {"nt", grid.nt}};
    j["grf"] = {{"length_scale", grf.length_scale},
                {"variance", grf.variance},
                {"jitter", grf.jitter}};
    j["fourier_modes"] = fourier_modes;
    j["fourier_decay"] = fourier_decay;
    j["coeff_base"] = coeff_base;
    j["coeff_scale"] = coeff_scale;
    j["coeff_floor"] = coeff_floor;
    return j.dump();
}

GenerationParams GenerationParams::from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    GenerationParams p;
    p.sensor_count = j.at("sensor_count").get<std::size_t>();
    p.grid.nx = j.at("grid").at("nx").get<std::size_t>();
    p.grid.nt = j.at("grid").at("nt").get<std::size_t>();
    p.grf.length_scale = j.at("grf").at("length_scale").get<double>();
    p.grf.variance = j.at("grf").at("variance").get<double>();
    p.grf.jitter = j.at("grf").at("jitter").get<double>();
    p.fourier_modes = j.at("fourier_modes").get<std::size_t>();
    p.fourier_decay = j.at("fourier_decay").get<double>();
    p.coeff_base = j.at("coeff_base").get<double>();
    p.coeff_scale = j.at("coeff_scale").get<double>();
    p.coeff_floor = j.at("coeff_floor").get<double>();
    return p;
}

namespace {

constexpr char kDatasetMagic[7] = {'E', 'D', 'O', 'N', 'D', 'S', '1'};

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& in, T& value) {
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
}

std::size_t sensor_stride(const GenerationParams& params) {
    const std::size_t m = params.sensor_count;
    const std::size_t nx = params.grid.nx;
    if (m < 2 || nx < m || (nx - 1) % (m - 1) != 0) {
        throw std::invalid_argument(
            "generate: solver grid nx must refine the sensor grid ((nx-1) divisible by (m-1))");
    }
    return (nx - 1) / (m - 1);
}

}  // namespace

void Dataset::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open dataset for writing: " + path);
    out.write(kDatasetMagic, sizeof(kDatasetMagic));
    write_pod(out, static_cast<std::uint8_t>(header.problem));
    write_pod(out, header.m);
    write_pod(out, header.n_functions);
    write_pod(out, header.queries_per_function);
    write_pod(out, header.master_seed);
    const std::string params_json = header.params.to_json();
    write_pod(out, static_cast<std::uint32_t>(params_json.size()));
    out.write(params_json.data(), static_cast<std::streamsize>(params_json.size()));
    out.write(reinterpret_cast<const char*>(records.data()),
              static_cast<std::streamsize>(records.size() * sizeof(double)));
    if (!out) throw std::runtime_error("failed writing dataset: " + path);
}

Dataset Dataset::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset: " + path);
    char magic[7];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kDatasetMagic, sizeof(magic)) != 0) {
        throw std::runtime_error("not a dataset file (bad magic): " + path);
    }
    Dataset data;
    std::uint8_t problem = 0;
    read_pod(in, problem);
    if (problem > 1) throw std::runtime_error("dataset: unknown problem id");
    data.header.problem = static_cast<Problem>(problem);
    read_pod(in, data.header.m);
    read_pod(in, data.header.n_functions);
    read_pod(in, data.header.queries_per_function);
    read_pod(in, data.header.master_seed);
    std::uint32_t params_len = 0;
    read_pod(in, params_len);
    std::string params_json(params_len, '\0');
    in.read(params_json.data(), params_len);
    if (!in) throw std::runtime_error("truncated dataset header: " + path);
    data.header.params = GenerationParams::from_json(params_json);

    const std::size_t expected = static_cast<std::size_t>(data.header.n_functions) *
                                 data.header.queries_per_function *
                                 (2 * data.header.m + 3);
    data.records.resize(expected);
    in.read(reinterpret_cast<char*>(data.records.data()),
            static_cast<std::streamsize>(expected * sizeof(double)));
    if (!in || in.gcount() != static_cast<std::streamsize>(expected * sizeof(double))) {
        throw std::runtime_error("truncated dataset records: " + path);
    }
    return data;
}

Dataset generate(Problem problem, std::size_t n_functions, std::size_t queries_per_function,
                 std::uint64_t master_seed, const GenerationParams& params) {
    if (n_functions < 1) throw std::invalid_argument("generate: need n_functions >= 1");
    if (queries_per_function < 1) throw std::invalid_argument("generate: need queries >= 1");
    const std::size_t stride = sensor_stride(params);
    const std::size_t m = params.sensor_count;
    const std::size_t nx = params.grid.nx;

    const SensorGrid dense_grid = SensorGrid::uniform(nx);

    Dataset data;
    data.header.problem = problem;
    data.header.m = static_cast<std::uint32_t>(m);
    data.header.n_functions = static_cast<std::uint32_t>(n_functions);
    data.header.queries_per_function = static_cast<std::uint32_t>(queries_per_function);
    data.header.master_seed = master_seed;
    data.header.params = params;
    data.records.resize(n_functions * queries_per_function * data.record_width());

    for (std::size_t i = 0; i < n_functions; ++i) {
        SolutionField field;
        FunctionSample u_dense, v_dense;
        bool solved = false;
        for (std::uint64_t attempt = 0; attempt < 8 && !solved; ++attempt) {
            try {
                const std::uint64_t base = derive_seed(master_seed, i, attempt);
                u_dense = sample_grf(params.grf, dense_grid, derive_seed(base, 0));
                v_dense = sample_periodic_fourier(params.fourier_modes, params.fourier_decay,
                                                  dense_grid, derive_seed(base, 1));
                const FunctionSample a = diffusion_coefficient(u_dense, params.coeff_base,
                                                               params.coeff_scale,
                                                               params.coeff_floor);
                field = problem == Problem::kDiffusion
                            ? solve_diffusion(a.values, v_dense.values, params.grid)
                            : solve_advection_diffusion(a.values, v_dense.values, params.grid);
                solved = true;
            } catch (const std::exception& e) {
                log::error("generate: function %zu attempt %llu failed: %s", i,
                           static_cast<unsigned long long>(attempt), e.what());
            }
        }
        if (!solved) {
            throw std::runtime_error("generate: function " + std::to_string(i) +
                                     " failed after 8 attempts");
        }

        Rng query_rng(derive_seed(derive_seed(master_seed, i, 0), 2));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (std::size_t q = 0; q < queries_per_function; ++q) {
            double* rec = data.records.data() +
                          (i * queries_per_function + q) * data.record_width();
            for (std::size_t j = 0; j < m; ++j) rec[j] = u_dense.values[j * stride];
            for (std::size_t j = 0; j < m; ++j) rec[m + j] = v_dense.values[j * stride];
            const double x = unit(query_rng);
            const double t = unit(query_rng);
            rec[2 * m] = x;
            rec[2 * m + 1] = t;
            rec[2 * m + 2] = sample_query(field, x, t);
        }
    }
    return data;
}

DatasetSplit split_functions(const Dataset& data, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("split: train_fraction must be in (0, 1)");
    }
    const std::size_t n = data.header.n_functions;
    std::vector<std::uint32_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    const auto n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(n)));
    if (n_train == 0 || n_train >= n) {
        throw std::invalid_argument("split: fraction " + std::to_string(train_fraction) +
                                    " leaves an empty side for " + std::to_string(n) +
                                    " functions");
    }
    DatasetSplit split;
    split.train_functions.assign(order.begin(), order.begin() + static_cast<long>(n_train));
    split.test_functions.assign(order.begin() + static_cast<long>(n_train), order.end());
    return split;
}

std::vector<std::uint64_t> record_indices(const Dataset& data,
                                          const std::vector<std::uint32_t>& functions) {
    const std::size_t per = data.header.queries_per_function;
    std::vector<std::uint64_t> indices;
    indices.reserve(functions.size() * per);
    for (std::uint32_t f : functions) {
        for (std::size_t q = 0; q < per; ++q) indices.push_back(std::uint64_t{f} * per + q);
    }
    return indices;
}

BatchStream::BatchStream(const Dataset& data, std::vector<std::uint64_t> indices,
                         std::size_t batch_size, std::uint64_t epoch_seed, bool shuffle)
    : data_(&data), indices_(std::move(indices)), batch_size_(batch_size) {
    if (batch_size_ < 1) throw std::invalid_argument("BatchStream: batch_size must be >= 1");
    if (indices_.empty()) throw std::invalid_argument("BatchStream: empty record set");
    if (shuffle) {
        Rng rng(epoch_seed);
        std::shuffle(indices_.begin(), indices_.end(), rng);
    }
}

std::size_t BatchStream::n_batches() const {
    return (indices_.size() + batch_size_ - 1) / batch_size_;
}

void BatchStream::reset() { cursor_ = 0; }

bool BatchStream::next(Batch& out) {
    if (cursor_ >= indices_.size()) return false;
    const std::size_t b = std::min(batch_size_, indices_.size() - cursor_);
    const std::size_t m = data_->header.m;
    if (out.u.rows() != b || out.u.cols() != m) {
        out.u = Tensor2(b, m);
        out.v = Tensor2(b, m);
        out.y = Tensor2(b, 2);
        out.s = Tensor2(b, 1);
    }
    for (std::size_t i = 0; i < b; ++i) {
        const std::uint64_t r = indices_[cursor_ + i];
        const double* rec = data_->record(r);
        std::copy(rec, rec + m, out.u.row(i));
        std::copy(rec + m, rec + 2 * m, out.v.row(i));
        out.y(i, 0) = rec[2 * m];
        out.y(i, 1) = rec[2 * m + 1];
        out.s(i, 0) = rec[2 * m + 2];
    }
    cursor_ += b;
    return true;
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file for digest: " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

}  // namespace operon
