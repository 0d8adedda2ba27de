#include "operon/training.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "operon/log.hpp"
#include "operon/rng.hpp"

extern "C" void openblas_set_num_threads(int);

namespace operon {

double mse(const std::vector<double>& predictions, const std::vector<double>& targets) {
    if (predictions.empty()) throw std::invalid_argument("mse: empty batch");
    if (predictions.size() != targets.size()) {
        throw std::invalid_argument("mse: length mismatch");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - targets[i];
        sum += d * d;
    }
    return sum / static_cast<double>(predictions.size());
}

namespace {

double batch_mse(const Tensor2& pred, const Tensor2& target) {
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.rows(); ++i) {
        const double d = pred(i, 0) - target(i, 0);
        sum += d * d;
    }
    return sum / static_cast<double>(pred.rows());
}

void check_model_compatible(const OperatorModel& model, const Dataset& data) {
    if (model.n_function_inputs() != 2) {
        throw std::invalid_argument("train: dataset records carry exactly two input functions, "
                                    "model expects " +
                                    std::to_string(model.n_function_inputs()));
    }
    if (model.spec().sensor_count != data.header.m) {
        throw std::invalid_argument("train: model sensor count " +
                                    std::to_string(model.spec().sensor_count) +
                                    " != dataset m " + std::to_string(data.header.m));
    }
    if (model.spec().query_dim != 2) {
        throw std::invalid_argument("train: dataset queries are (x, t); query_dim must be 2");
    }
}

constexpr std::size_t kEvalChunk = 4096;

}  // namespace

double evaluate_mse(OperatorModel& model, const Dataset& data,
                    const std::vector<std::uint64_t>& records) {
    BatchStream stream(data, records, kEvalChunk, 0, /*shuffle=*/false);
    Batch batch;
    double sum = 0.0;
    std::size_t count = 0;
    while (stream.next(batch)) {
        const Tensor2 pred = model.forward({&batch.u, &batch.v}, batch.y);
        for (std::size_t i = 0; i < pred.rows(); ++i) {
            const double d = pred(i, 0) - batch.s(i, 0);
            sum += d * d;
        }
        count += pred.rows();
    }
    return sum / static_cast<double>(count);
}

TrainResult train(OperatorModel& model, const Dataset& data,
                  const std::vector<std::uint64_t>& train_records,
                  const std::vector<std::uint64_t>& test_records, const TrainConfig& config) {
    if (config.lr < 0.0) throw std::invalid_argument("train: negative learning rate");
    if (config.epochs < 1) throw std::invalid_argument("train: need epochs >= 1");
    if (config.eval_every < 1) throw std::invalid_argument("train: need eval_every >= 1");
    if (train_records.empty()) throw std::invalid_argument("train: empty training side");
    check_model_compatible(model, data);

    std::size_t batch_size = config.batch_size;
    if (batch_size == 0) {
        batch_size = std::min<std::size_t>(1000, std::max<std::size_t>(1, train_records.size() / 10));
    }

    AdamConfig adam_config;
    adam_config.lr = config.lr;
    Adam adam(adam_config, model.parameters());

    RunMetrics metrics;
    metrics.train_mse.reserve(config.epochs);
    metrics.test_mse.reserve(config.epochs);
    metrics.best_train_mse = std::numeric_limits<double>::infinity();
    metrics.best_test_mse = std::numeric_limits<double>::infinity();

    TrainResult result;
    Batch batch;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        BatchStream stream(data, train_records, batch_size, derive_seed(config.seed, epoch));
        double loss_sum = 0.0;
        std::size_t seen = 0;
        std::size_t batch_index = 0;
        while (stream.next(batch)) {
            ++batch_index;
            const std::size_t b = batch.y.rows();
            const Tensor2 pred = model.forward({&batch.u, &batch.v}, batch.y);
            const double loss = batch_mse(pred, batch.s);
            if (!std::isfinite(loss)) {
                double max_abs_param = 0.0;
                for (const ParamRef& ref : model.parameters()) {
                    for (std::size_t i = 0; i < ref.value->size(); ++i) {
                        max_abs_param = std::max(max_abs_param, std::abs(ref.value->data()[i]));
                    }
                }
                throw std::runtime_error(
                    "train: non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                    std::to_string(batch_index) + " (max |param| = " +
                    std::to_string(max_abs_param) + ")");
            }
            loss_sum += loss * static_cast<double>(b);
            seen += b;

            Tensor2 upstream(b, 1);
            const double scale = 2.0 / static_cast<double>(b);
            for (std::size_t i = 0; i < b; ++i) {
                upstream(i, 0) = scale * (pred(i, 0) - batch.s(i, 0));
            }
            model.backward(upstream);
            adam.step();  // applies the update and zeroes gradients
        }
        const double train_mse_epoch = loss_sum / static_cast<double>(seen);
        metrics.train_mse.push_back(train_mse_epoch);
        if (train_mse_epoch < metrics.best_train_mse) {
            metrics.best_train_mse = train_mse_epoch;
            metrics.best_train_epoch = epoch;
        }

        double test_mse_epoch = std::numeric_limits<double>::quiet_NaN();
        const bool evaluate = !test_records.empty() &&
                              (epoch % config.eval_every == 0 || epoch == config.epochs);
        if (evaluate) {
            test_mse_epoch = evaluate_mse(model, data, test_records);
            if (test_mse_epoch < metrics.best_test_mse) {
                metrics.best_test_mse = test_mse_epoch;
                metrics.best_test_epoch = epoch;
                result.best_params = model.flatten_parameters();
            }
        }
        metrics.test_mse.push_back(test_mse_epoch);

        metrics.epoch_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        log::debug("epoch %zu train %.6e test %.6e", epoch, train_mse_epoch, test_mse_epoch);
    }

    if (result.best_params.empty()) result.best_params = model.flatten_parameters();

    if (!config.curves_path.empty()) {
        std::FILE* f = std::fopen(config.curves_path.c_str(), "w");
        if (f == nullptr) {
            throw std::runtime_error("cannot write curves CSV: " + config.curves_path);
        }
        std::fprintf(f, "epoch,train_mse,test_mse\n");
        for (std::size_t e = 0; e < metrics.train_mse.size(); ++e) {
            if (std::isnan(metrics.test_mse[e])) continue;
            std::fprintf(f, "%zu,%.17g,%.17g\n", e + 1, metrics.train_mse[e],
                         metrics.test_mse[e]);
        }
        std::fclose(f);
    }

    result.metrics = std::move(metrics);
    return result;
}

FieldEvaluation evaluate_field(OperatorModel& model, const std::vector<double>& u_dense,
                               const std::vector<double>& v_dense, Problem problem,
                               const GenerationParams& params) {
    const std::size_t m = params.sensor_count;
    const std::size_t nx = params.grid.nx;
    const std::size_t nt = params.grid.nt;
    if (u_dense.size() != nx || v_dense.size() != nx) {
        throw std::invalid_argument("evaluate_field: u/v must live on the solver grid");
    }
    if (model.spec().sensor_count != m) {
        throw std::invalid_argument("evaluate_field: model sensor count mismatch");
    }
    const std::size_t stride = (nx - 1) / (m - 1);
    if ((nx - 1) % (m - 1) != 0) {
        throw std::invalid_argument("evaluate_field: sensor grid does not divide solver grid");
    }

    const FunctionSample u_sample{u_dense};
    const FunctionSample a = diffusion_coefficient(u_sample, params.coeff_base,
                                                   params.coeff_scale, params.coeff_floor);
    FieldEvaluation eval;
    eval.truth = problem == Problem::kDiffusion
                     ? solve_diffusion(a.values, v_dense, params.grid)
                     : solve_advection_diffusion(a.values, v_dense, params.grid);
    eval.prediction.grid = params.grid;
    eval.prediction.values.resize(nt * nx);
    eval.abs_error.grid = params.grid;
    eval.abs_error.values.resize(nt * nx);

    // predict one batch of time levels at a time
    const std::size_t levels_per_chunk = std::max<std::size_t>(1, kEvalChunk / nx);
    const double dx = eval.truth.grid.dx();
    const double dt = eval.truth.grid.dt();
    for (std::size_t k0 = 0; k0 < nt; k0 += levels_per_chunk) {
        const std::size_t k1 = std::min(nt, k0 + levels_per_chunk);
        const std::size_t rows = (k1 - k0) * nx;
        Tensor2 u_mat(rows, m), v_mat(rows, m), y_mat(rows, 2);
        std::size_t r = 0;
        for (std::size_t k = k0; k < k1; ++k) {
            for (std::size_t j = 0; j < nx; ++j, ++r) {
                for (std::size_t c = 0; c < m; ++c) {
                    u_mat(r, c) = u_dense[c * stride];
                    v_mat(r, c) = v_dense[c * stride];
                }
                y_mat(r, 0) = static_cast<double>(j) * dx;
                y_mat(r, 1) = static_cast<double>(k) * dt;
            }
        }
        const Tensor2 pred = model.forward({&u_mat, &v_mat}, y_mat);
        r = 0;
        for (std::size_t k = k0; k < k1; ++k) {
            for (std::size_t j = 0; j < nx; ++j, ++r) eval.prediction.value(k, j) = pred(r, 0);
        }
    }

    double sum = 0.0;
    for (std::size_t idx = 0; idx < eval.truth.values.size(); ++idx) {
        const double err = std::abs(eval.prediction.values[idx] - eval.truth.values[idx]);
        eval.abs_error.values[idx] = err;
        eval.max_abs_error = std::max(eval.max_abs_error, err);
        sum += err;
    }
    eval.mean_abs_error = sum / static_cast<double>(eval.truth.values.size());
    return eval;
}

void export_field_text(const SolutionField& field, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (f == nullptr) throw std::runtime_error("cannot write field: " + path);
    std::fprintf(f, "%zu %zu\n", field.grid.nx, field.grid.nt);
    for (std::size_t k = 0; k < field.grid.nt; ++k) {
        for (std::size_t j = 0; j < field.grid.nx; ++j) {
            std::fprintf(f, "%.17g%c", field.value(k, j), j + 1 == field.grid.nx ? '\n' : ' ');
        }
    }
    std::fclose(f);
}

void export_field_pgm(const SolutionField& field, const std::string& path) {
    double lo = field.values[0], hi = field.values[0];
    for (double v : field.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (f == nullptr) throw std::runtime_error("cannot write PGM: " + path);
    std::fprintf(f, "P5\n%zu %zu\n255\n", field.grid.nx, field.grid.nt);
    for (std::size_t k = 0; k < field.grid.nt; ++k) {
        for (std::size_t j = 0; j < field.grid.nx; ++j) {
            const double norm = (field.value(k, j) - lo) / span;
            const auto byte = static_cast<unsigned char>(std::lround(norm * 255.0));
            std::fputc(byte, f);
        }
    }
    std::fclose(f);
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median: empty");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

CompareReport compare(const Dataset& data, const CompareConfig& config) {
    if (config.n_seeds < 1) throw std::invalid_argument("compare: need n_seeds >= 1");

    // one deterministic gemm stream per worker
    openblas_set_num_threads(1);

    const DatasetSplit split = split_functions(data, config.train_fraction, config.seed);
    const std::vector<std::uint64_t> train_records = record_indices(data, split.train_functions);
    const std::vector<std::uint64_t> test_records = record_indices(data, split.test_functions);

    ModelSpec reference = config.reference;
    reference.sensor_count = data.header.m;
    reference.kind = ModelKind::kEDeepOnet;
    const std::array<ModelKind, 3> kinds = {ModelKind::kFnn, ModelKind::kDeepOnetConcat,
                                            ModelKind::kEDeepOnet};
    std::array<ModelSpec, 3> specs = {match_parameter_counts(reference, ModelKind::kFnn),
                                      match_parameter_counts(reference, ModelKind::kDeepOnetConcat),
                                      reference};

    struct Run {
        std::size_t kind_index;
        std::size_t seed_index;
    };
    std::vector<Run> runs;
    for (std::size_t k = 0; k < kinds.size(); ++k) {
        for (std::size_t s = 0; s < config.n_seeds; ++s) runs.push_back({k, s});
    }

    struct RunOutput {
        SeedOutcome outcome;
        std::vector<double> train_curve;
        std::string error;
    };
    std::vector<RunOutput> outputs(runs.size());

    std::atomic<std::size_t> next_run{0};
    std::mutex log_mutex;
    auto worker = [&]() {
        while (true) {
            const std::size_t idx = next_run.fetch_add(1);
            if (idx >= runs.size()) return;
            const Run run = runs[idx];
            const std::uint64_t model_seed = derive_seed(config.seed, run.kind_index + 1,
                                                         run.seed_index);
            try {
                ModelSpec spec = specs[run.kind_index];
                spec.seed = model_seed;
                OperatorModel model(spec);

                TrainConfig train_config = config.train;
                train_config.seed = derive_seed(model_seed, 0xbeef);
                if (!config.out_dir.empty()) {
                    train_config.curves_path = config.out_dir + "/curves_" +
                                               kind_name(spec.kind) + "_seed" +
                                               std::to_string(run.seed_index) + ".csv";
                }
                {
                    std::lock_guard<std::mutex> lock(log_mutex);
                    log::info("compare: training %s seed %zu (%zu params)",
                              kind_name(spec.kind), run.seed_index, parameter_count(spec));
                }
                const TrainResult result = train(model, data, train_records, test_records,
                                                 train_config);
                outputs[idx].outcome = {model_seed, result.metrics.best_train_mse,
                                        result.metrics.best_test_mse,
                                        result.metrics.best_train_epoch,
                                        result.metrics.best_test_epoch};
                outputs[idx].train_curve = result.metrics.train_mse;
            } catch (const std::exception& e) {
                outputs[idx].error = std::string(kind_name(kinds[run.kind_index])) + " seed " +
                                     std::to_string(run.seed_index) + ": " + e.what();
            }
        }
    };

    const std::size_t jobs = std::max<std::size_t>(1, std::min(config.jobs, runs.size()));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (std::size_t i = 0; i < jobs; ++i) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    CompareReport report;
    report.problem = data.header.problem;
    for (std::size_t k = 0; k < kinds.size(); ++k) {
        ModelComparison comparison;
        comparison.spec = specs[k];
        comparison.param_count = parameter_count(specs[k]);
        std::vector<double> train_bests, test_bests;
        for (std::size_t idx = 0; idx < runs.size(); ++idx) {
            if (runs[idx].kind_index != k) continue;
            if (!outputs[idx].error.empty()) {
                report.complete = false;
                report.errors.push_back(outputs[idx].error);
                continue;
            }
            comparison.per_seed.push_back(outputs[idx].outcome);
            comparison.train_curves.push_back(outputs[idx].train_curve);
            train_bests.push_back(outputs[idx].outcome.best_train_mse);
            test_bests.push_back(outputs[idx].outcome.best_test_mse);
        }
        if (!train_bests.empty()) {
            comparison.median_best_train_mse = median(train_bests);
            comparison.median_best_test_mse = median(test_bests);
        }
        report.models[kind_name(kinds[k])] = std::move(comparison);
    }

    const ModelComparison& edeep = report.models.at("edeeponet");
    if (edeep.median_best_train_mse > 0.0) {
        report.train_ratio_fnn =
            report.models.at("fnn").median_best_train_mse / edeep.median_best_train_mse;
        report.test_ratio_fnn =
            report.models.at("fnn").median_best_test_mse / edeep.median_best_test_mse;
        report.train_ratio_deeponet =
            report.models.at("deeponet").median_best_train_mse / edeep.median_best_train_mse;
        report.test_ratio_deeponet =
            report.models.at("deeponet").median_best_test_mse / edeep.median_best_test_mse;
    }
    return report;
}

std::string report_to_json(const CompareReport& report, const CompareConfig& config,
                           const std::string& dataset_digest) {
    nlohmann::json j;
    j["problem"] = problem_name(report.problem);
    j["complete"] = report.complete;
    if (!report.errors.empty()) j["errors"] = report.errors;
    j["config"] = {{"lr", config.train.lr},
                   {"batch_size", config.train.batch_size},
                   {"epochs", config.train.epochs},
                   {"eval_every", config.train.eval_every},
                   {"n_seeds", config.n_seeds},
                   {"train_fraction", config.train_fraction},
                   {"seed", config.seed}};
    j["dataset_digest"] = dataset_digest;
    for (const auto& [name, comparison] : report.models) {
        nlohmann::json m;
        m["spec_digest"] = comparison.spec.digest();
        m["param_count"] = comparison.param_count;
        m["median_best_train_mse"] = comparison.median_best_train_mse;
        m["median_best_test_mse"] = comparison.median_best_test_mse;
        for (const SeedOutcome& outcome : comparison.per_seed) {
            m["per_seed"].push_back({{"seed", outcome.seed},
                                     {"best_train_mse", outcome.best_train_mse},
                                     {"best_test_mse", outcome.best_test_mse},
                                     {"best_train_epoch", outcome.best_train_epoch},
                                     {"best_test_epoch", outcome.best_test_epoch}});
        }
        j["models"][name] = std::move(m);
    }
    j["ratios"] = {{"fnn_over_edeeponet",
                    {{"train", report.train_ratio_fnn}, {"test", report.test_ratio_fnn}}},
                   {"deeponet_over_edeeponet",
                    {{"train", report.train_ratio_deeponet},
                     {"test", report.test_ratio_deeponet}}}};
    return j.dump(2) + "\n";
}

}  // namespace operon
