#pragma once

#include <cassert>
#include <cstddef>
#include <stdexcept>

namespace impact {

/// Uniform rectangular discretization of [t_start, t_end] x [x_min, x_max].
/// Space has n_space nodes, time has n_time steps (n_time + 1 levels).
struct SpaceTimeGrid {
    double x_min = 40.0;
    double x_max = 250.0;
    std::size_t n_space = 801;
    double t_start = 0.0;
    double t_end = 1.0;
    std::size_t n_time = 400;

    SpaceTimeGrid() = default;
    SpaceTimeGrid(double x_min, double x_max, std::size_t n_space,
                  double t_start, double t_end, std::size_t n_time)
        : x_min(x_min), x_max(x_max), n_space(n_space),
          t_start(t_start), t_end(t_end), n_time(n_time) {
        validate();
    }

    void validate() const {
        if (!(x_min < x_max)) throw std::invalid_argument("grid: x_min must be < x_max");
        if (!(t_start < t_end)) throw std::invalid_argument("grid: t_start must be < t_end");
        if (n_space < 3) throw std::invalid_argument("grid: n_space must be >= 3");
        if (n_time < 1) throw std::invalid_argument("grid: n_time must be >= 1");
    }

    double dx() const { return (x_max - x_min) / static_cast<double>(n_space - 1); }
    double dt() const { return (t_end - t_start) / static_cast<double>(n_time); }

    double x(std::size_t j) const { return x_min + static_cast<double>(j) * dx(); }
    double t(std::size_t i) const { return t_start + static_cast<double>(i) * dt(); }

    /// Row-major index into a (n_time+1) x n_space surface.
    std::size_t at(std::size_t i, std::size_t j) const { return i * n_space + j; }
    std::size_t surface_size() const { return (n_time + 1) * n_space; }
};

}  // namespace impact
