#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "operon/sampling.hpp"
#include "operon/solver.hpp"
#include "operon/tensor.hpp"

namespace operon {

enum class Problem : std::uint8_t { kDiffusion = 0, kAdvectionDiffusion = 1 };

const char* problem_name(Problem problem);
Problem problem_from_name(const std::string& name);

/// Everything the generation pipeline needs besides counts and the seed.
/// Stored in the dataset header so a file is self-describing.
struct GenerationParams {
    std::size_t sensor_count = 101;
    SolverGrid grid{201, 201};
    GrfSpec grf{};
    std::size_t fourier_modes = 5;
    double fourier_decay = 2.0;
    double coeff_base = 0.1;
    double coeff_scale = 0.1;
    double coeff_floor = 0.02;

    static GenerationParams defaults_for(Problem problem);
    std::string to_json() const;
    static GenerationParams from_json(const std::string& text);
};

struct DatasetHeader {
    Problem problem = Problem::kDiffusion;
    std::uint32_t m = 0;
    std::uint32_t n_functions = 0;
    std::uint32_t queries_per_function = 0;
    std::uint64_t master_seed = 0;
    GenerationParams params;
};

/// Records are stored exactly as laid out on disk: for each record
/// [u_1..u_m, v_1..v_m, x, t, s] as 64-bit floats.
class Dataset {
  public:
    DatasetHeader header;
    std::vector<double> records;

    std::size_t record_width() const { return 2 * header.m + 3; }
    std::size_t n_records() const { return record_width() ? records.size() / record_width() : 0; }

    const double* record(std::size_t r) const { return records.data() + r * record_width(); }
    const double* u_sensors(std::size_t r) const { return record(r); }
    const double* v_sensors(std::size_t r) const { return record(r) + header.m; }
    double query_x(std::size_t r) const { return record(r)[2 * header.m]; }
    double query_t(std::size_t r) const { return record(r)[2 * header.m + 1]; }
    double target(std::size_t r) const { return record(r)[2 * header.m + 2]; }

    void save(const std::string& path) const;
    static Dataset load(const std::string& path);
};

/// Full pipeline: per function draw u (GRF) and v (periodic Fourier),
/// form a(x), solve the PDE, sample P uniform query points, interpolate
/// targets. Deterministic given (master_seed, parameters).
Dataset generate(Problem problem, std::size_t n_functions, std::size_t queries_per_function,
                 std::uint64_t master_seed, const GenerationParams& params);

/// Train/test partition at the function level: all records of one
/// (u, v) pair land on the same side.
struct DatasetSplit {
    std::vector<std::uint32_t> train_functions;
    std::vector<std::uint32_t> test_functions;
};

DatasetSplit split_functions(const Dataset& data, double train_fraction, std::uint64_t seed);

/// Record indices belonging to the given functions, in function order.
std::vector<std::uint64_t> record_indices(const Dataset& data,
                                          const std::vector<std::uint32_t>& functions);

struct Batch {
    Tensor2 u;  // b×m
    Tensor2 v;  // b×m
    Tensor2 y;  // b×2
    Tensor2 s;  // b×1
};

/// Epoch iterator: shuffles the record indices by epoch_seed and emits
/// dense batches, including the final partial one.
class BatchStream {
  public:
    BatchStream(const Dataset& data, std::vector<std::uint64_t> indices, std::size_t batch_size,
                std::uint64_t epoch_seed, bool shuffle = true);

    bool next(Batch& out);
    std::size_t n_batches() const;
    void reset();

  private:
    const Dataset* data_;
    std::vector<std::uint64_t> indices_;
    std::size_t batch_size_;
    std::size_t cursor_ = 0;
};

/// FNV-1a content digest of a file, as 16 hex characters.
std::string file_digest(const std::string& path);

}  // namespace operon
