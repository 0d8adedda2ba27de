#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "operon/training.hpp"

using operon::Dataset;
using operon::GenerationParams;
using operon::ModelKind;
using operon::ModelSpec;
using operon::OperatorModel;
using operon::Problem;
using operon::TrainConfig;
using operon::TrainResult;

namespace {

GenerationParams tiny_params() {
    GenerationParams params = GenerationParams::defaults_for(Problem::kDiffusion);
    params.sensor_count = 11;
    params.grid = operon::SolverGrid{21, 11};
    return params;
}

ModelSpec tiny_spec(ModelKind kind, std::uint64_t seed) {
    ModelSpec spec;
    spec.kind = kind;
    spec.sensor_count = 11;
    spec.branch_widths = {8};
    spec.trunk_widths = {8};
    spec.latent_dim = 8;
    spec.fnn_widths = {10, 10};
    spec.seed = seed;
    return spec;
}

std::vector<std::uint64_t> all_records(const Dataset& data) {
    std::vector<std::uint64_t> idx(data.n_records());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return idx;
}

}  // namespace

TEST_CASE("mse basics") {
    CHECK(operon::mse({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
    CHECK(operon::mse({1.0, 3.0}, {0.0, 0.0}) == 5.0);
    // shift invariance
    const std::vector<double> p = {0.3, -0.8, 1.7};
    const std::vector<double> t = {0.1, 0.2, -0.9};
    std::vector<double> ps = p, ts = t;
    for (double& x : ps) x += 17.5;
    for (double& x : ts) x += 17.5;
    CHECK(std::abs(operon::mse(ps, ts) - operon::mse(p, t)) < 1e-12);
    CHECK_THROWS_AS(operon::mse({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(operon::mse({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("zero learning rate freezes the model") {
    const Dataset data = operon::generate(Problem::kDiffusion, 4, 5, 3, tiny_params());
    OperatorModel model(tiny_spec(ModelKind::kEDeepOnet, 5));
    const std::vector<double> before = model.flatten_parameters();
    TrainConfig config;
    config.lr = 0.0;
    config.epochs = 3;
    config.seed = 9;
    const TrainResult result = operon::train(model, data, all_records(data), {}, config);
    CHECK(model.flatten_parameters() == before);
    CHECK(result.metrics.train_mse.size() == 3);
    CHECK(result.metrics.train_mse[0] == result.metrics.train_mse[1]);
    CHECK(result.metrics.train_mse[1] == result.metrics.train_mse[2]);
}

TEST_CASE("a single record is memorized to high precision") {
    const Dataset data = operon::generate(Problem::kDiffusion, 1, 1, 12, tiny_params());
    REQUIRE(data.n_records() == 1);
    TrainConfig config;
    config.epochs = 1000;
    config.seed = 4;
    for (ModelKind kind :
         {ModelKind::kFnn, ModelKind::kDeepOnetConcat, ModelKind::kEDeepOnet}) {
        OperatorModel model(tiny_spec(kind, 21));
        const TrainResult result = operon::train(model, data, all_records(data), {}, config);
        CHECK(result.metrics.best_train_mse < 1e-6);
    }
}

TEST_CASE("training is bit-deterministic given config and seed") {
    const Dataset data = operon::generate(Problem::kDiffusion, 6, 8, 31, tiny_params());
    auto run = [&] {
        OperatorModel model(tiny_spec(ModelKind::kEDeepOnet, 77));
        TrainConfig config;
        config.epochs = 5;
        config.seed = 13;
        config.batch_size = 16;
        const std::vector<std::uint64_t> records = all_records(data);
        const std::vector<std::uint64_t> train(records.begin(), records.begin() + 40);
        const std::vector<std::uint64_t> test(records.begin() + 40, records.end());
        return operon::train(model, data, train, test, config);
    };
    const TrainResult a = run();
    const TrainResult b = run();
    CHECK(a.metrics.train_mse == b.metrics.train_mse);
    CHECK(a.metrics.test_mse == b.metrics.test_mse);
    CHECK(a.best_params == b.best_params);
}

TEST_CASE("best metrics are the minima of the curves") {
    const Dataset data = operon::generate(Problem::kDiffusion, 6, 6, 41, tiny_params());
    OperatorModel model(tiny_spec(ModelKind::kDeepOnetConcat, 3));
    TrainConfig config;
    config.epochs = 8;
    config.seed = 2;
    const std::vector<std::uint64_t> records = all_records(data);
    const std::vector<std::uint64_t> train(records.begin(), records.begin() + 24);
    const std::vector<std::uint64_t> test(records.begin() + 24, records.end());
    const TrainResult result = operon::train(model, data, train, test, config);
    double min_train = result.metrics.train_mse[0];
    for (double v : result.metrics.train_mse) min_train = std::min(min_train, v);
    CHECK(result.metrics.best_train_mse == min_train);
    double min_test = INFINITY;
    for (double v : result.metrics.test_mse) {
        if (!std::isnan(v)) min_test = std::min(min_test, v);
    }
    CHECK(result.metrics.best_test_mse == min_test);
    CHECK(result.metrics.train_mse[result.metrics.best_train_epoch - 1] ==
          result.metrics.best_train_mse);
}

TEST_CASE("evaluating twice in a row gives identical values") {
    const Dataset data = operon::generate(Problem::kDiffusion, 4, 6, 51, tiny_params());
    OperatorModel model(tiny_spec(ModelKind::kEDeepOnet, 8));
    const auto records = all_records(data);
    const double first = operon::evaluate_mse(model, data, records);
    const double second = operon::evaluate_mse(model, data, records);
    CHECK(first == second);
    const std::vector<double> params = model.flatten_parameters();
    operon::evaluate_mse(model, data, records);
    CHECK(model.flatten_parameters() == params);  // inference does not mutate
}

TEST_CASE("curves csv has one row per evaluated epoch") {
    const Dataset data = operon::generate(Problem::kDiffusion, 4, 5, 61, tiny_params());
    OperatorModel model(tiny_spec(ModelKind::kEDeepOnet, 1));
    TrainConfig config;
    config.epochs = 6;
    config.eval_every = 2;
    config.curves_path = "test_curves.csv";
    const std::vector<std::uint64_t> records = all_records(data);
    const std::vector<std::uint64_t> train(records.begin(), records.begin() + 15);
    const std::vector<std::uint64_t> test(records.begin() + 15, records.end());
    operon::train(model, data, train, test, config);
    std::FILE* f = std::fopen("test_curves.csv", "r");
    REQUIRE(f != nullptr);
    char line[256];
    int rows = 0;
    REQUIRE(std::fgets(line, sizeof(line), f) != nullptr);
    CHECK(std::string(line) == "epoch,train_mse,test_mse\n");
    while (std::fgets(line, sizeof(line), f) != nullptr) ++rows;
    std::fclose(f);
    CHECK(rows == 3);  // epochs 2, 4, 6
    std::remove("test_curves.csv");
}

TEST_CASE("training validates model/dataset compatibility") {
    const Dataset data = operon::generate(Problem::kDiffusion, 2, 3, 71, tiny_params());
    ModelSpec spec = tiny_spec(ModelKind::kEDeepOnet, 0);
    spec.sensor_count = 7;  // dataset has m = 11
    OperatorModel wrong_m(spec);
    TrainConfig config;
    config.epochs = 1;
    CHECK_THROWS_AS(operon::train(wrong_m, data, all_records(data), {}, config),
                    std::invalid_argument);

    ModelSpec three = tiny_spec(ModelKind::kEDeepOnet, 0);
    three.n_branches = 3;
    OperatorModel three_branches(three);
    CHECK_THROWS_AS(operon::train(three_branches, data, all_records(data), {}, config),
                    std::invalid_argument);
}

TEST_CASE("zero-weight model against the zero field has zero error") {
    GenerationParams params = tiny_params();
    OperatorModel model(tiny_spec(ModelKind::kEDeepOnet, 5));
    for (const operon::ParamRef& ref : model.parameters()) ref.value->set_zero();
    const std::vector<double> u(params.grid.nx, 0.0);
    const std::vector<double> v(params.grid.nx, 0.0);
    const operon::FieldEvaluation eval =
        operon::evaluate_field(model, u, v, Problem::kDiffusion, params);
    CHECK(eval.max_abs_error == 0.0);
    CHECK(eval.mean_abs_error == 0.0);
}

TEST_CASE("field evaluation error statistics are consistent") {
    GenerationParams params = tiny_params();
    OperatorModel model(tiny_spec(ModelKind::kEDeepOnet, 15));
    const operon::SensorGrid dense = operon::SensorGrid::uniform(params.grid.nx);
    const operon::FunctionSample u = operon::sample_grf(params.grf, dense, 3);
    const operon::FunctionSample v = operon::sample_periodic_fourier(5, 2.0, dense, 4);
    const operon::FieldEvaluation eval =
        operon::evaluate_field(model, u.values, v.values, Problem::kDiffusion, params);
    CHECK(eval.max_abs_error >= eval.mean_abs_error);
    double max_err = 0.0;
    for (double e : eval.abs_error.values) max_err = std::max(max_err, e);
    CHECK(max_err == eval.max_abs_error);

    // the t=0 slice of the error field is |prediction(x,0) - v(x)|
    for (std::size_t j = 0; j < params.grid.nx; ++j) {
        CHECK(eval.abs_error.value(0, j) ==
              doctest::Approx(std::abs(eval.prediction.value(0, j) - v.values[j]))
                  .epsilon(1e-12));
    }
}

TEST_CASE("field exports write the advertised formats") {
    operon::SolutionField field;
    field.grid = operon::SolverGrid{5, 3};
    field.values.resize(15);
    for (std::size_t i = 0; i < 15; ++i) field.values[i] = static_cast<double>(i);
    operon::export_field_text(field, "test_field.txt");
    std::FILE* f = std::fopen("test_field.txt", "r");
    REQUIRE(f != nullptr);
    std::size_t nx = 0, nt = 0;
    REQUIRE(std::fscanf(f, "%zu %zu", &nx, &nt) == 2);
    CHECK(nx == 5);
    CHECK(nt == 3);
    double value = -1.0;
    for (int i = 0; i < 15; ++i) REQUIRE(std::fscanf(f, "%lf", &value) == 1);
    CHECK(value == 14.0);
    std::fclose(f);
    std::remove("test_field.txt");

    operon::export_field_pgm(field, "test_field.pgm");
    f = std::fopen("test_field.pgm", "rb");
    REQUIRE(f != nullptr);
    char magic[3] = {};
    REQUIRE(std::fscanf(f, "%2s %zu %zu", magic, &nx, &nt) == 3);
    CHECK(std::string(magic) == "P5");
    CHECK(nx == 5);
    CHECK(nt == 3);
    std::fclose(f);
    std::remove("test_field.pgm");
}

TEST_CASE("median of odd and even counts") {
    CHECK(operon::median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(operon::median({4.0, 1.0, 2.0, 3.0}) == 2.5);
    CHECK_THROWS_AS(operon::median({}), std::invalid_argument);
}

TEST_CASE("compare produces a complete three-model report at smoke scale") {
    GenerationParams params = tiny_params();
    const Dataset data = operon::generate(Problem::kDiffusion, 10, 6, 19, params);
    operon::CompareConfig config;
    config.train.epochs = 3;
    config.train.batch_size = 16;
    config.n_seeds = 2;
    config.train_fraction = 0.8;
    config.seed = 55;
    config.reference = tiny_spec(ModelKind::kEDeepOnet, 0);
    const operon::CompareReport report = operon::compare(data, config);

    CHECK(report.complete);
    CHECK(report.models.size() == 3);
    for (const char* name : {"fnn", "deeponet", "edeeponet"}) {
        const operon::ModelComparison& m = report.models.at(name);
        CHECK(m.per_seed.size() == 2);
        CHECK(m.train_curves.size() == 2);
        CHECK(m.train_curves[0].size() == 3);
        CHECK(m.param_count > 0);
    }
    // parameter matching within +-5% of the reference
    const double ref = static_cast<double>(report.models.at("edeeponet").param_count);
    for (const char* name : {"fnn", "deeponet"}) {
        const double got = static_cast<double>(report.models.at(name).param_count);
        CHECK(std::abs(got - ref) <= 0.05 * ref);
    }
    // ratios recompute from the report's own medians
    CHECK(report.test_ratio_fnn ==
          doctest::Approx(report.models.at("fnn").median_best_test_mse /
                          report.models.at("edeeponet").median_best_test_mse)
              .epsilon(1e-12));

    // determinism of the whole comparison
    const operon::CompareReport again = operon::compare(data, config);
    CHECK(again.models.at("fnn").median_best_test_mse ==
          report.models.at("fnn").median_best_test_mse);
    CHECK(again.models.at("edeeponet").per_seed[1].best_train_mse ==
          report.models.at("edeeponet").per_seed[1].best_train_mse);
}

TEST_CASE("report json is stable and carries the required fields") {
    GenerationParams params = tiny_params();
    const Dataset data = operon::generate(Problem::kDiffusion, 6, 4, 20, params);
    operon::CompareConfig config;
    config.train.epochs = 2;
    config.train.batch_size = 8;
    config.n_seeds = 1;
    config.train_fraction = 0.7;
    config.seed = 3;
    config.reference = tiny_spec(ModelKind::kEDeepOnet, 0);
    const operon::CompareReport report = operon::compare(data, config);
    const std::string a = operon::report_to_json(report, config, "cafe");
    const std::string b = operon::report_to_json(report, config, "cafe");
    CHECK(a == b);
    CHECK(a.find("\"spec_digest\"") != std::string::npos);
    CHECK(a.find("\"param_count\"") != std::string::npos);
    CHECK(a.find("\"per_seed\"") != std::string::npos);
    CHECK(a.find("\"ratios\"") != std::string::npos);
    CHECK(a.find("\"dataset_digest\": \"cafe\"") != std::string::npos);
}
