#pragma once

#include <cstddef>
#include <vector>

namespace operon {

/// Space-time grid on [0,1]x[0,1]: nx spatial points including both
/// endpoints, nt time levels including t=0 and t=1.
struct SolverGrid {
    std::size_t nx = 201;
    std::size_t nt = 201;

    double dx() const { return 1.0 / static_cast<double>(nx - 1); }
    double dt() const { return 1.0 / static_cast<double>(nt - 1); }
};

/// Ground-truth solution on a SolverGrid, time-major: value(k, j) is
/// s(x_j, t_k). Every time level carries the duplicated periodic endpoint
/// (value(k, 0) == value(k, nx-1)).
struct SolutionField {
    SolverGrid grid;
    std::vector<double> values;  // nt * nx, row k = time level k

    double value(std::size_t k, std::size_t j) const { return values[k * grid.nx + j]; }
    double& value(std::size_t k, std::size_t j) { return values[k * grid.nx + j]; }
};

/// Solve the periodic tridiagonal system
///   sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]
/// with wraparound entries corner_lo = A[n-1][0] and corner_hi = A[0][n-1],
/// via Sherman-Morrison reduction to two Thomas solves.
std::vector<double> solve_cyclic_tridiagonal(const std::vector<double>& sub,
                                             const std::vector<double>& diag,
                                             const std::vector<double>& sup, double corner_lo,
                                             double corner_hi, const std::vector<double>& rhs);

/// s_t = a(x) s_xx with periodic BCs and s(x,0) = v(x).
/// Crank-Nicolson in time (two internal substeps per output interval),
/// second-order central differences in space. a and v are given on the
/// grid's nx points; a must be positive and v periodic.
SolutionField solve_diffusion(const std::vector<double>& a, const std::vector<double>& v,
                              const SolverGrid& grid);

/// s_t + s_x = a(x) s_xx, same discretization with central-difference
/// advection at unit speed.
SolutionField solve_advection_diffusion(const std::vector<double>& a,
                                        const std::vector<double>& v, const SolverGrid& grid);

/// Bilinear interpolation of the field at (x, t); exact at grid nodes.
/// Throws std::invalid_argument outside [0,1]^2.
double sample_query(const SolutionField& field, double x, double t);

}  // namespace operon
