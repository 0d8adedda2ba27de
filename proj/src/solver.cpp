#include "operon/solver.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace operon {

namespace {

constexpr std::size_t kSubstepsPerInterval = 2;

// Thomas algorithm; sub[0] and sup[n-1] are ignored.
std::vector<double> solve_tridiagonal(const std::vector<double>& sub,
                                      const std::vector<double>& diag,
                                      const std::vector<double>& sup,
                                      const std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    std::vector<double> c_star(n), x(n);
    double pivot = diag[0];
    if (pivot == 0.0) throw std::runtime_error("tridiagonal solve: zero pivot at row 0");
    c_star[0] = sup[0] / pivot;
    x[0] = rhs[0] / pivot;
    for (std::size_t i = 1; i < n; ++i) {
        pivot = diag[i] - sub[i] * c_star[i - 1];
        if (pivot == 0.0) {
            throw std::runtime_error("tridiagonal solve: zero pivot at row " + std::to_string(i));
        }
        c_star[i] = sup[i] / pivot;
        x[i] = (rhs[i] - sub[i] * x[i - 1]) / pivot;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= c_star[i] * x[i + 1];
    return x;
}

}  // namespace

std::vector<double> solve_cyclic_tridiagonal(const std::vector<double>& sub,
                                             const std::vector<double>& diag,
                                             const std::vector<double>& sup, double corner_lo,
                                             double corner_hi, const std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    if (sub.size() != n || sup.size() != n || rhs.size() != n) {
        throw std::invalid_argument("solve_cyclic_tridiagonal: band length mismatch");
    }
    if (n == 0) return {};
    if (n == 1) {
        const double d = diag[0];
        if (d == 0.0) throw std::runtime_error("cyclic solve: singular 1x1 system");
        return {rhs[0] / d};
    }
    if (n == 2) {
        // off-diagonal entries collide with the corners; sum them
        const double a01 = sup[0] + corner_hi;
        const double a10 = sub[1] + corner_lo;
        const double det = diag[0] * diag[1] - a01 * a10;
        if (det == 0.0) throw std::runtime_error("cyclic solve: singular 2x2 system");
        return {(rhs[0] * diag[1] - a01 * rhs[1]) / det,
                (diag[0] * rhs[1] - a10 * rhs[0]) / det};
    }

    // Sherman-Morrison: A = A' + u v^T with u = (gamma,0,..,corner_lo),
    // v = (1,0,..,corner_hi/gamma).
    const double gamma = diag[0] != 0.0 ? -diag[0] : 1.0;
    std::vector<double> diag_mod = diag;
    diag_mod[0] -= gamma;
    diag_mod[n - 1] -= corner_lo * corner_hi / gamma;

    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = corner_lo;

    const std::vector<double> y = solve_tridiagonal(sub, diag_mod, sup, rhs);
    const std::vector<double> z = solve_tridiagonal(sub, diag_mod, sup, u);

    const double vy = y[0] + corner_hi / gamma * y[n - 1];
    const double vz = z[0] + corner_hi / gamma * z[n - 1];
    const double denom = 1.0 + vz;
    if (denom == 0.0) throw std::runtime_error("cyclic solve: singular system (Sherman-Morrison)");
    const double factor = vy / denom;

    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] - factor * z[i];
    return x;
}

namespace {

void validate_inputs(const std::vector<double>& a, const std::vector<double>& v,
                     const SolverGrid& grid, bool require_positive_a) {
    if (grid.nx < 3) throw std::invalid_argument("SolverGrid: nx must be >= 3");
    if (grid.nt < 2) throw std::invalid_argument("SolverGrid: nt must be >= 2");
    if (a.size() != grid.nx || v.size() != grid.nx) {
        throw std::invalid_argument("solver: coefficient/initial data must have nx values");
    }
    if (require_positive_a) {
        for (double aj : a) {
            if (!(aj > 0.0)) {
                throw std::invalid_argument("solver: diffusion coefficient must be positive");
            }
        }
    }
    if (std::abs(v.front() - v.back()) > 1e-9) {
        throw std::invalid_argument("solver: initial condition must be periodic (v[0]==v[nx-1])");
    }
}

// Shared Crank-Nicolson stepper. advection_speed is 0 for pure diffusion.
SolutionField crank_nicolson(const std::vector<double>& a, const std::vector<double>& v,
                             const SolverGrid& grid, double advection_speed) {
    validate_inputs(a, v, grid, true);

    const std::size_t unknowns = grid.nx - 1;  // periodic point stored once
    const double dx = grid.dx();
    const double dt = grid.dt() / static_cast<double>(kSubstepsPerInterval);

    // mu_j = a_j dt / (2 dx^2), nu = c dt / (4 dx): half-weights of the
    // spatial operators on each side of the Crank-Nicolson average.
    std::vector<double> mu(unknowns);
    for (std::size_t j = 0; j < unknowns; ++j) mu[j] = a[j] * dt / (2.0 * dx * dx);
    const double nu = advection_speed * dt / (4.0 * dx);

    std::vector<double> sub(unknowns), diag(unknowns), sup(unknowns);
    for (std::size_t j = 0; j < unknowns; ++j) {
        sub[j] = -(nu + mu[j]);
        diag[j] = 1.0 + 2.0 * mu[j];
        sup[j] = nu - mu[j];
    }
    // wraparound entries: row 0 couples to x_{n-1} with its sub coefficient,
    // row n-1 couples to x_0 with its sup coefficient
    const double corner_hi = sub[0];
    const double corner_lo = sup[unknowns - 1];

    SolutionField field;
    field.grid = grid;
    field.values.resize(grid.nt * grid.nx);

    std::vector<double> state(v.begin(), v.begin() + unknowns);
    std::vector<double> rhs(unknowns);

    auto store_level = [&](std::size_t k) {
        double* row = field.values.data() + k * grid.nx;
        for (std::size_t j = 0; j < unknowns; ++j) row[j] = state[j];
        row[grid.nx - 1] = state[0];
    };
    store_level(0);

    for (std::size_t k = 1; k < grid.nt; ++k) {
        for (std::size_t step = 0; step < kSubstepsPerInterval; ++step) {
            for (std::size_t j = 0; j < unknowns; ++j) {
                const double left = state[j == 0 ? unknowns - 1 : j - 1];
                const double right = state[j + 1 == unknowns ? 0 : j + 1];
                rhs[j] = (nu + mu[j]) * left + (1.0 - 2.0 * mu[j]) * state[j] +
                         (mu[j] - nu) * right;
            }
            state = solve_cyclic_tridiagonal(sub, diag, sup, corner_lo, corner_hi, rhs);
        }
        store_level(k);
    }

    for (double x : field.values) {
        if (!std::isfinite(x)) throw std::runtime_error("solver: non-finite solution value");
    }
    return field;
}

}  // namespace

SolutionField solve_diffusion(const std::vector<double>& a, const std::vector<double>& v,
                              const SolverGrid& grid) {
    return crank_nicolson(a, v, grid, 0.0);
}

SolutionField solve_advection_diffusion(const std::vector<double>& a,
                                        const std::vector<double>& v, const SolverGrid& grid) {
    return crank_nicolson(a, v, grid, 1.0);
}

double sample_query(const SolutionField& field, double x, double t) {
    if (!(x >= 0.0 && x <= 1.0 && t >= 0.0 && t <= 1.0)) {
        throw std::invalid_argument("sample_query: (" + std::to_string(x) + ", " +
                                    std::to_string(t) + ") outside [0,1]^2");
    }
    const std::size_t nx = field.grid.nx;
    const std::size_t nt = field.grid.nt;

    auto locate = [](double coord, std::size_t n) {
        double p = coord * static_cast<double>(n - 1);
        // snap to the node so queries at grid coordinates are exact
        const double nearest = std::round(p);
        if (std::abs(p - nearest) < 1e-9) p = nearest;
        std::size_t idx = static_cast<std::size_t>(p);
        if (idx >= n - 1) idx = n - 2;
        return std::pair<std::size_t, double>(idx, p - static_cast<double>(idx));
    };

    const auto [j, fx] = locate(x, nx);
    const auto [k, ft] = locate(t, nt);

    const double v00 = field.value(k, j);
    const double v01 = field.value(k, j + 1);
    const double v10 = field.value(k + 1, j);
    const double v11 = field.value(k + 1, j + 1);
    return (1.0 - ft) * ((1.0 - fx) * v00 + fx * v01) + ft * ((1.0 - fx) * v10 + fx * v11);
}

}  // namespace operon
