#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "operon/dataset.hpp"
#include "operon/models.hpp"

namespace operon {

double mse(const std::vector<double>& predictions, const std::vector<double>& targets);

struct TrainConfig {
    double lr = 1e-4;
    std::size_t batch_size = 0;  // 0: min(1000, max(1, train_size / 10))
    std::size_t epochs = 200;
    std::size_t eval_every = 1;
    std::uint64_t seed = 0;
    std::string curves_path;  // write per-epoch CSV here when non-empty
};

struct RunMetrics {
    std::vector<double> train_mse;  // one entry per epoch
    std::vector<double> test_mse;   // NaN on epochs without evaluation
    std::vector<double> epoch_seconds;
    double best_train_mse = 0.0;
    std::size_t best_train_epoch = 0;  // 1-based
    double best_test_mse = 0.0;
    std::size_t best_test_epoch = 0;
};

struct TrainResult {
    RunMetrics metrics;
    std::vector<double> best_params;  // parameters at the best test epoch
};

/// MSE training loop: shuffle → forward → loss → backward → Adam, with a
/// full test-side evaluation every eval_every epochs and best-test
/// parameter retention. Aborts with std::runtime_error on non-finite loss.
TrainResult train(OperatorModel& model, const Dataset& data,
                  const std::vector<std::uint64_t>& train_records,
                  const std::vector<std::uint64_t>& test_records, const TrainConfig& config);

/// Mean MSE of the model over the given records, in inference mode.
double evaluate_mse(OperatorModel& model, const Dataset& data,
                    const std::vector<std::uint64_t>& records);

struct FieldEvaluation {
    SolutionField truth;
    SolutionField prediction;
    SolutionField abs_error;
    double max_abs_error = 0.0;
    double mean_abs_error = 0.0;
};

/// Query the model at every node of the solver grid for one fresh (u, v)
/// pair given on the dense grid, next to the finite-difference truth.
FieldEvaluation evaluate_field(OperatorModel& model, const std::vector<double>& u_dense,
                               const std::vector<double>& v_dense, Problem problem,
                               const GenerationParams& params);

void export_field_text(const SolutionField& field, const std::string& path);
void export_field_pgm(const SolutionField& field, const std::string& path);

struct SeedOutcome {
    std::uint64_t seed = 0;
    double best_train_mse = 0.0;
    double best_test_mse = 0.0;
    std::size_t best_train_epoch = 0;
    std::size_t best_test_epoch = 0;
};

struct ModelComparison {
    ModelSpec spec;
    std::size_t param_count = 0;
    std::vector<SeedOutcome> per_seed;
    std::vector<std::vector<double>> train_curves;  // per seed, per epoch
    double median_best_train_mse = 0.0;
    double median_best_test_mse = 0.0;
};

struct CompareConfig {
    TrainConfig train;
    std::size_t n_seeds = 5;
    double train_fraction = 0.9;
    std::uint64_t seed = 0;  // master seed: split + per-run seeds
    std::size_t jobs = 1;
    std::string out_dir;  // per-run curves CSVs written here when non-empty
    ModelSpec reference;  // EDeepONet spec the baselines are matched to
};

struct CompareReport {
    Problem problem = Problem::kDiffusion;
    std::map<std::string, ModelComparison> models;  // keyed by kind name
    double train_ratio_fnn = 0.0;       // median FNN / median EDeepONet
    double test_ratio_fnn = 0.0;
    double train_ratio_deeponet = 0.0;  // median DeepONet / median EDeepONet
    double test_ratio_deeponet = 0.0;
    bool complete = true;
    std::vector<std::string> errors;
};

/// Three-way experiment: parameter-match the baselines to the reference
/// EDeepONet, train every (model, seed) pair on the identical split, and
/// report per-seed plus median best MSEs with improvement ratios.
CompareReport compare(const Dataset& data, const CompareConfig& config);

/// Canonical JSON rendering of a report (what `operon compare` writes).
std::string report_to_json(const CompareReport& report, const CompareConfig& config,
                           const std::string& dataset_digest);

double median(std::vector<double> values);

}  // namespace operon
