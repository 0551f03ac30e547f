#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "impact/grid.hpp"

namespace impact {

struct TriDiagSystem {
    std::vector<double> lower;  // size n, lower[0] unused
    std::vector<double> diag;   // size n
    std::vector<double> upper;  // size n, upper[n-1] unused
    std::vector<double> rhs;    // size n
};

/// Central second difference in the interior; endpoints copy the nearest
/// interior value (zero-curvature boundary convention).
std::vector<double> second_diff(std::span<const double> values, const SpaceTimeGrid& grid);
std::vector<double> second_diff(std::span<const double> values, double dx);

/// Central first difference in the interior, one-sided at the endpoints.
std::vector<double> first_diff(std::span<const double> values, double dx);

/// Thomas elimination. Throws SingularSystem when a pivot falls below 1e-14.
std::vector<double> solve_tridiag(const TriDiagSystem& system);

/// Pointwise values on xs of the least concave majorant of the piecewise
/// linear interpolant (upper hull, monotone chain, O(n)).
std::vector<double> upper_concave_envelope(std::span<const double> xs,
                                           std::span<const double> ys);

struct ClampStats {
    std::size_t below = 0;
    std::size_t above = 0;
    std::size_t total() const { return below + above; }
};

/// Piecewise-linear interpolation on the spatial grid; out-of-domain queries
/// are clamped and counted.
double interp_linear(const SpaceTimeGrid& grid, std::span<const double> values,
                     double x, ClampStats* clamp = nullptr);

/// Bilinear interpolation on a (n_time+1) x n_space surface.
double interp_bilinear(const SpaceTimeGrid& grid, std::span<const double> surface,
                       double t, double x, ClampStats* clamp = nullptr);

}  // namespace impact
