#include "impact/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "impact/errors.hpp"

namespace impact {

std::vector<double> second_diff(std::span<const double> values, double dx) {
    const std::size_t n = values.size();
    if (n < 3) throw LengthMismatch("second_diff: need at least 3 values");
    std::vector<double> out(n);
    const double inv = 1.0 / (dx * dx);
    for (std::size_t j = 1; j + 1 < n; ++j)
        out[j] = (values[j + 1] - 2.0 * values[j] + values[j - 1]) * inv;
    out[0] = out[1];
    out[n - 1] = out[n - 2];
    return out;
}

std::vector<double> second_diff(std::span<const double> values, const SpaceTimeGrid& grid) {
    if (values.size() != grid.n_space)
        throw LengthMismatch("second_diff: values length != n_space");
    return second_diff(values, grid.dx());
}

std::vector<double> first_diff(std::span<const double> values, double dx) {
    const std::size_t n = values.size();
    if (n < 2) throw LengthMismatch("first_diff: need at least 2 values");
    std::vector<double> out(n);
    for (std::size_t j = 1; j + 1 < n; ++j)
        out[j] = (values[j + 1] - values[j - 1]) / (2.0 * dx);
    out[0] = (values[1] - values[0]) / dx;
    out[n - 1] = (values[n - 1] - values[n - 2]) / dx;
    return out;
}

std::vector<double> solve_tridiag(const TriDiagSystem& system) {
    const std::size_t n = system.diag.size();
    if (system.lower.size() != n || system.upper.size() != n || system.rhs.size() != n)
        throw LengthMismatch("solve_tridiag: band/rhs length mismatch");
    std::vector<double> c(n), d(n);
    double pivot = system.diag[0];
    if (std::abs(pivot) < 1e-14) throw SingularSystem("solve_tridiag: zero pivot at row 0");
    c[0] = system.upper[0] / pivot;
    d[0] = system.rhs[0] / pivot;
    for (std::size_t j = 1; j < n; ++j) {
        pivot = system.diag[j] - system.lower[j] * c[j - 1];
        if (std::abs(pivot) < 1e-14)
            throw SingularSystem("solve_tridiag: zero pivot at row " + std::to_string(j));
        c[j] = system.upper[j] / pivot;
        d[j] = (system.rhs[j] - system.lower[j] * d[j - 1]) / pivot;
    }
    std::vector<double> x(n);
    x[n - 1] = d[n - 1];
    for (std::size_t j = n - 1; j-- > 0;) x[j] = d[j] - c[j] * x[j + 1];
    return x;
}

std::vector<double> upper_concave_envelope(std::span<const double> xs,
                                           std::span<const double> ys) {
    const std::size_t n = xs.size();
    if (n != ys.size()) throw LengthMismatch("upper_concave_envelope: xs/ys length mismatch");
    if (n < 2) throw LengthMismatch("upper_concave_envelope: need at least 2 points");
    for (std::size_t j = 1; j < n; ++j)
        if (!(xs[j] > xs[j - 1]))
            throw UnsortedInput("upper_concave_envelope: xs must be strictly increasing");

    // Monotone chain over the point set; keep only points on the upper hull.
    std::vector<std::size_t> hull;
    hull.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        while (hull.size() >= 2) {
            const std::size_t a = hull[hull.size() - 2], b = hull[hull.size() - 1];
            // b lies below the chord a -> j  <=>  cross product > 0. Points
            // within round-off of the chord are popped too, so a re-run on the
            // output reproduces the same hull vertices and hence the same
            // interpolated values bit-for-bit (exact idempotence).
            const double cross = (xs[b] - xs[a]) * (ys[j] - ys[a]) -
                                 (xs[j] - xs[a]) * (ys[b] - ys[a]);
            const double tol = 1e-13 * (xs[j] - xs[a]) *
                               (1.0 + std::abs(ys[a]) + std::abs(ys[b]) + std::abs(ys[j]));
            if (cross >= -tol)
                hull.pop_back();
            else
                break;
        }
        hull.push_back(j);
    }

    std::vector<double> out(n);
    std::size_t seg = 0;
    for (std::size_t j = 0; j < n; ++j) {
        while (seg + 1 < hull.size() && xs[hull[seg + 1]] < xs[j]) ++seg;
        const std::size_t a = hull[seg];
        const std::size_t b = hull[std::min(seg + 1, hull.size() - 1)];
        if (a == b || xs[j] <= xs[a]) {
            out[j] = ys[a];
        } else {
            const double w = (xs[j] - xs[a]) / (xs[b] - xs[a]);
            out[j] = ys[a] + w * (ys[b] - ys[a]);
        }
        out[j] = std::max(out[j], ys[j]);
    }
    return out;
}

double interp_linear(const SpaceTimeGrid& grid, std::span<const double> values,
                     double x, ClampStats* clamp) {
    if (values.size() != grid.n_space)
        throw LengthMismatch("interp_linear: values length != n_space");
    if (x <= grid.x_min) {
        if (clamp && x < grid.x_min) ++clamp->below;
        return values.front();
    }
    if (x >= grid.x_max) {
        if (clamp && x > grid.x_max) ++clamp->above;
        return values.back();
    }
    const double s = (x - grid.x_min) / grid.dx();
    const std::size_t j = std::min(static_cast<std::size_t>(s), grid.n_space - 2);
    const double w = s - static_cast<double>(j);
    return values[j] + w * (values[j + 1] - values[j]);
}

double interp_bilinear(const SpaceTimeGrid& grid, std::span<const double> surface,
                       double t, double x, ClampStats* clamp) {
    if (surface.size() != grid.surface_size())
        throw LengthMismatch("interp_bilinear: surface size mismatch");
    double s = (t - grid.t_start) / grid.dt();
    s = std::clamp(s, 0.0, static_cast<double>(grid.n_time));
    const std::size_t i = std::min(static_cast<std::size_t>(s), grid.n_time - 1);
    const double wt = s - static_cast<double>(i);
    const auto row0 = surface.subspan(grid.at(i, 0), grid.n_space);
    const auto row1 = surface.subspan(grid.at(i + 1, 0), grid.n_space);
    const double v0 = interp_linear(grid, row0, x, clamp);
    const double v1 = interp_linear(grid, row1, x, nullptr);
    return v0 + wt * (v1 - v0);
}

}  // namespace impact
