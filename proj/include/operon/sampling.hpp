#pragma once

#include <cstdint>
#include <vector>

#include "operon/rng.hpp"

namespace operon {

/// m equally spaced sensor locations covering [0, 1] inclusive.
struct SensorGrid {
    std::size_t m = 0;
    std::vector<double> locations;

    static SensorGrid uniform(std::size_t m);
};

/// One input function evaluated on a SensorGrid.
struct FunctionSample {
    std::vector<double> values;
};

/// Mean-zero Gaussian random field with RBF kernel
/// k(x, x') = variance * exp(-(x-x')^2 / (2 length_scale^2)).
struct GrfSpec {
    double length_scale = 0.2;
    double variance = 1.0;
    double jitter = 1e-10;
};

/// GRF draw via Cholesky of the kernel matrix, clamped to [-1, 1].
FunctionSample sample_grf(const GrfSpec& spec, const SensorGrid& grid, std::uint64_t seed);

/// Same draw without the clamp (covariance checks need the raw field).
FunctionSample sample_grf_unclamped(const GrfSpec& spec, const SensorGrid& grid,
                                    std::uint64_t seed);

/// Evaluate sum_k (sin_coef[k] sin(2π(k+1)x) + cos_coef[k] cos(2π(k+1)x)).
FunctionSample fourier_series(const std::vector<double>& sin_coef,
                              const std::vector<double>& cos_coef, const SensorGrid& grid);

/// v(x) = sum_{k=1..n_modes} k^-decay (a_k sin(2πkx) + b_k cos(2πkx)),
/// a_k, b_k ~ N(0,1). Exactly 1-periodic and mean-zero by construction.
/// The same seed yields the same coefficients on any grid.
FunctionSample sample_periodic_fourier(std::size_t n_modes, double decay, const SensorGrid& grid,
                                       std::uint64_t seed);

/// a(x_j) = max(floor, base + scale * (u(x_j) + u(x_{m-1-j})) / 2).
/// The symmetrization makes a(x) == a(1-x) exactly on the grid.
FunctionSample diffusion_coefficient(const FunctionSample& u, double base, double scale,
                                     double floor);

}  // namespace operon
