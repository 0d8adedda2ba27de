#include "operon/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace operon {

SensorGrid SensorGrid::uniform(std::size_t m) {
    if (m < 2) throw std::invalid_argument("SensorGrid: need at least 2 sensors");
    SensorGrid grid;
    grid.m = m;
    grid.locations.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        grid.locations[j] = static_cast<double>(j) / static_cast<double>(m - 1);
    }
    return grid;
}

namespace {

// Lower-triangular Cholesky factor of a symmetric positive definite matrix
// stored dense row-major. Throws on a non-positive pivot.
std::vector<double> cholesky(std::vector<double> a, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (d <= 0.0 || !std::isfinite(d)) {
            throw std::runtime_error("sample_grf: covariance not positive definite at pivot " +
                                     std::to_string(j));
        }
        const double l = std::sqrt(d);
        a[j * n + j] = l;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / l;
        }
    }
    // zero the upper triangle so the factor can be used directly
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) a[i * n + j] = 0.0;
    }
    return a;
}

}  // namespace

FunctionSample sample_grf_unclamped(const GrfSpec& spec, const SensorGrid& grid,
                                    std::uint64_t seed) {
    if (spec.length_scale <= 0.0) throw std::invalid_argument("GrfSpec: length_scale must be > 0");
    if (spec.variance <= 0.0) throw std::invalid_argument("GrfSpec: variance must be > 0");
    if (spec.jitter < 0.0) throw std::invalid_argument("GrfSpec: jitter must be >= 0");

    const std::size_t n = grid.m;
    std::vector<double> cov(n * n);
    const double inv_2l2 = 1.0 / (2.0 * spec.length_scale * spec.length_scale);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double d = grid.locations[i] - grid.locations[j];
            cov[i * n + j] = spec.variance * std::exp(-d * d * inv_2l2);
        }
        cov[i * n + i] += spec.jitter;
    }
    const std::vector<double> factor = cholesky(std::move(cov), n);

    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> z(n);
    for (double& x : z) x = normal(rng);

    FunctionSample sample;
    sample.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k <= i; ++k) s += factor[i * n + k] * z[k];
        sample.values[i] = s;
    }
    return sample;
}

FunctionSample sample_grf(const GrfSpec& spec, const SensorGrid& grid, std::uint64_t seed) {
    FunctionSample sample = sample_grf_unclamped(spec, grid, seed);
    for (double& v : sample.values) v = std::clamp(v, -1.0, 1.0);
    return sample;
}

FunctionSample fourier_series(const std::vector<double>& sin_coef,
                              const std::vector<double>& cos_coef, const SensorGrid& grid) {
    if (sin_coef.size() != cos_coef.size()) {
        throw std::invalid_argument("fourier_series: coefficient length mismatch");
    }
    FunctionSample sample;
    sample.values.resize(grid.m);
    for (std::size_t j = 0; j < grid.m; ++j) {
        const double x = grid.locations[j];
        double v = 0.0;
        for (std::size_t k = 0; k < sin_coef.size(); ++k) {
            const double w = 2.0 * std::numbers::pi * static_cast<double>(k + 1) * x;
            v += sin_coef[k] * std::sin(w) + cos_coef[k] * std::cos(w);
        }
        sample.values[j] = v;
    }
    // enforce exact periodicity against rounding in sin/cos at x=1
    if (grid.locations.front() == 0.0 && grid.locations.back() == 1.0) {
        sample.values.back() = sample.values.front();
    }
    return sample;
}

FunctionSample sample_periodic_fourier(std::size_t n_modes, double decay, const SensorGrid& grid,
                                       std::uint64_t seed) {
    if (n_modes < 1) throw std::invalid_argument("sample_periodic_fourier: need n_modes >= 1");

    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> sin_coef(n_modes);
    std::vector<double> cos_coef(n_modes);
    for (std::size_t k = 0; k < n_modes; ++k) {
        const double amp = std::pow(static_cast<double>(k + 1), -decay);
        sin_coef[k] = amp * normal(rng);
        cos_coef[k] = amp * normal(rng);
    }
    return fourier_series(sin_coef, cos_coef, grid);
}

FunctionSample diffusion_coefficient(const FunctionSample& u, double base, double scale,
                                     double floor) {
    if (floor <= 0.0) {
        throw std::invalid_argument(
            "diffusion_coefficient: floor must be > 0 (the coefficient must stay positive)");
    }
    const std::size_t m = u.values.size();
    FunctionSample a;
    a.values.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double sym = 0.5 * (u.values[j] + u.values[m - 1 - j]);
        a.values[j] = std::max(floor, base + scale * sym);
    }
    return a;
}

}  // namespace operon
