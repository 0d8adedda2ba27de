#include <doctest.h>

#include <cmath>

#include <stdexcept>
#include "operon/rng.hpp"
#include "operon/sampling.hpp"

using operon::FunctionSample;
using operon::GrfSpec;
using operon::SensorGrid;

TEST_CASE("sensor grid spans [0,1] with strictly increasing locations") {
    const SensorGrid grid = SensorGrid::uniform(101);
    CHECK(grid.m == 101);
    CHECK(grid.locations.front() == 0.0);
    CHECK(grid.locations.back() == 1.0);
    for (std::size_t j = 1; j < grid.m; ++j) {
        CHECK(grid.locations[j] > grid.locations[j - 1]);
    }
    CHECK_THROWS_AS(SensorGrid::uniform(1), std::invalid_argument);
}

TEST_CASE("grf degenerate variance gives a near-zero field") {
    GrfSpec spec;
    spec.variance = 1e-20;
    spec.jitter = 0.0;  // absolute jitter would drown the vanishing field
    const SensorGrid grid = SensorGrid::uniform(11);
    const FunctionSample sample = operon::sample_grf(spec, grid, 5);
    for (double v : sample.values) CHECK(std::abs(v) < 1e-9);
}

TEST_CASE("grf draws are deterministic per seed") {
    const SensorGrid grid = SensorGrid::uniform(101);
    const FunctionSample a = operon::sample_grf(GrfSpec{}, grid, 2024);
    const FunctionSample b = operon::sample_grf(GrfSpec{}, grid, 2024);
    CHECK(a.values == b.values);
    const FunctionSample c = operon::sample_grf(GrfSpec{}, grid, 2025);
    CHECK(a.values != c.values);
}

TEST_CASE("grf draws respect the clamp") {
    const SensorGrid grid = SensorGrid::uniform(101);
    GrfSpec spec;
    spec.variance = 4.0;  // wide field so the clamp actually engages
    bool clamped_somewhere = false;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const FunctionSample sample = operon::sample_grf(spec, grid, seed);
        for (double v : sample.values) {
            CHECK(v >= -1.0);
            CHECK(v <= 1.0);
            if (v == 1.0 || v == -1.0) clamped_somewhere = true;
        }
    }
    CHECK(clamped_somewhere);
}

TEST_CASE("grf empirical covariance matches the RBF kernel") {
    // sensors at 0.0 and 0.1 on an 11-point grid; l = 0.2, var = 1:
    // expected covariance exp(-0.01 / 0.08) = 0.8825
    const SensorGrid grid = SensorGrid::uniform(11);
    GrfSpec spec;
    spec.length_scale = 0.2;
    spec.variance = 1.0;
    const int draws = 10000;
    double sum00 = 0.0, sum01 = 0.0, sum0 = 0.0, sum1 = 0.0;
    for (int d = 0; d < draws; ++d) {
        const FunctionSample s = operon::sample_grf_unclamped(spec, grid, 1000 + d);
        sum0 += s.values[0];
        sum1 += s.values[1];
        sum00 += s.values[0] * s.values[0];
        sum01 += s.values[0] * s.values[1];
    }
    const double mean0 = sum0 / draws;
    const double mean1 = sum1 / draws;
    const double cov = sum01 / draws - mean0 * mean1;
    const double var = sum00 / draws - mean0 * mean0;
    CHECK(std::abs(cov - std::exp(-0.01 / 0.08)) < 0.05);
    CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("grf parameter validation") {
    const SensorGrid grid = SensorGrid::uniform(11);
    GrfSpec bad;
    bad.length_scale = 0.0;
    CHECK_THROWS_AS(operon::sample_grf(bad, grid, 1), std::invalid_argument);
    bad = GrfSpec{};
    bad.variance = -1.0;
    CHECK_THROWS_AS(operon::sample_grf(bad, grid, 1), std::invalid_argument);
}

TEST_CASE("periodic fourier endpoints coincide") {
    const SensorGrid grid = SensorGrid::uniform(101);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const FunctionSample v = operon::sample_periodic_fourier(5, 2.0, grid, seed);
        CHECK(std::abs(v.values.front() - v.values.back()) < 1e-12);
    }
}

TEST_CASE("forced single sine mode hits its extrema") {
    const SensorGrid grid = SensorGrid::uniform(5);  // 0, .25, .5, .75, 1
    const FunctionSample v = operon::fourier_series({1.0}, {0.0}, grid);
    CHECK(v.values[1] == doctest::Approx(1.0).epsilon(1e-12));   // sin(pi/2)
    CHECK(v.values[3] == doctest::Approx(-1.0).epsilon(1e-12));  // sin(3pi/2)
}

TEST_CASE("fourier draws have zero mean over the periodic points") {
    const SensorGrid grid = SensorGrid::uniform(101);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const FunctionSample v = operon::sample_periodic_fourier(5, 2.0, grid, seed);
        double mean = 0.0;
        for (std::size_t j = 0; j + 1 < grid.m; ++j) mean += v.values[j];
        mean /= static_cast<double>(grid.m - 1);
        CHECK(std::abs(mean) < 1e-10);
    }
}

TEST_CASE("fourier draws agree across grids sharing the seed") {
    const SensorGrid coarse = SensorGrid::uniform(11);
    const SensorGrid fine = SensorGrid::uniform(21);
    const FunctionSample vc = operon::sample_periodic_fourier(5, 2.0, coarse, 77);
    const FunctionSample vf = operon::sample_periodic_fourier(5, 2.0, fine, 77);
    for (std::size_t j = 0; j < coarse.m; ++j) {
        CHECK(vc.values[j] == doctest::Approx(vf.values[2 * j]).epsilon(1e-14));
    }
}

TEST_CASE("diffusion coefficient of the zero field is the base") {
    FunctionSample u;
    u.values.assign(101, 0.0);
    const FunctionSample a = operon::diffusion_coefficient(u, 0.1, 0.1, 0.02);
    for (double v : a.values) CHECK(v == 0.1);
}

TEST_CASE("diffusion coefficient of the constant-one field") {
    FunctionSample u;
    u.values.assign(101, 1.0);
    const FunctionSample a = operon::diffusion_coefficient(u, 0.1, 0.1, 0.02);
    for (double v : a.values) CHECK(v == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("diffusion coefficient is symmetric and floored for random fields") {
    const SensorGrid grid = SensorGrid::uniform(101);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const FunctionSample u = operon::sample_grf(GrfSpec{}, grid, seed);
        const FunctionSample a = operon::diffusion_coefficient(u, 0.1, 0.1, 0.02);
        const std::size_t m = a.values.size();
        for (std::size_t j = 0; j < m; ++j) {
            CHECK(a.values[j] == a.values[m - 1 - j]);  // exact symmetrization
            CHECK(a.values[j] >= 0.02);
        }
        CHECK(a.values.front() == a.values.back());
    }
}

TEST_CASE("diffusion coefficient rejects a non-positive floor") {
    FunctionSample u;
    u.values.assign(11, 0.0);
    CHECK_THROWS_AS(operon::diffusion_coefficient(u, 0.1, 0.1, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(operon::diffusion_coefficient(u, 0.1, 0.1, -0.1), std::invalid_argument);
}

TEST_CASE("derive_seed decorrelates master/index/stream") {
    const std::uint64_t a = operon::derive_seed(1, 0, 0);
    const std::uint64_t b = operon::derive_seed(1, 1, 0);
    const std::uint64_t c = operon::derive_seed(1, 0, 1);
    const std::uint64_t d = operon::derive_seed(2, 0, 0);
    CHECK(a != b);
    CHECK(a != c);
    CHECK(a != d);
    CHECK(operon::derive_seed(1, 0, 0) == a);
}
