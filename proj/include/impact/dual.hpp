#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "impact/grid.hpp"
#include "impact/model.hpp"
#include "impact/numerics.hpp"
#include "impact/pde.hpp"

namespace impact {

/// Volatility control for the dual representation: a member of the class of
/// non-negative bounded predictable processes.
struct ControlSpec {
    enum class Kind { MarkovFromPde, Constant, Table };

    Kind kind = Kind::Constant;
    double constant = 0.2;
    const PdeSolution* solution = nullptr;       // MarkovFromPde
    SpaceTimeGrid table_grid;                    // Table
    std::vector<double> table_values;
    double s_max = 1e4;

    static ControlSpec markov_from_pde(const PdeSolution& sol, double s_max = 1e4);
    static ControlSpec constant_vol(double s);
    static ControlSpec table(SpaceTimeGrid grid, std::vector<double> surface);

    double operator()(double t, double x) const;
};

struct McResult {
    double estimate = 0.0;
    double stderr_ = 0.0;
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    std::uint64_t seed = 0;
    double penalty_mean = 0.0;
    double contact_fraction = 0.0;
    double gap_mean = 0.0;               // E[g_hat(X_T) - g(X_T)]
    bool unbounded_penalty = false;
    ClampStats clamp;
};

struct PathBatch {
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    std::vector<double> terminal;        // X_T per path
    std::vector<double> control_mean;    // path-average control
    double terminal_mean = 0.0;
    double terminal_stderr = 0.0;
};

/// Euler-Maruyama for X = x0 + int s dW with the control evaluated at the
/// left endpoint; one independent counter-based stream per path.
PathBatch simulate_controlled_paths(const ControlSpec& control, const SpaceTimeGrid& grid,
                                    double x0, std::size_t n_paths, std::size_t n_steps,
                                    std::uint64_t seed);

/// Penalized dual objective E[payoff(X_T) - sum bar F*(t_i, X_i, s_i^2) dt].
/// payoff_values are grid values of g_hat (or g); g_values, when supplied,
/// feed the contact diagnostic.
McResult dual_value(const ControlSpec& control, std::span<const double> payoff_values,
                    const ImpactModel& model, const SpaceTimeGrid& grid, double x0,
                    std::size_t n_paths, std::size_t n_steps, std::uint64_t seed,
                    std::span<const double> g_values = {});

struct DualSweepRow {
    std::string label;
    McResult result;
};

struct DualSweepTable {
    std::vector<DualSweepRow> rows;
    std::size_t best_index = 0;
    double pde_price = 0.0;
    double best_gap = 0.0;  // pde_price - best estimate
};

/// Batch evaluation with common random numbers; reports the best control and
/// its gap to the PDE price.
DualSweepTable dual_sweep(std::span<const ControlSpec> controls,
                          std::span<const std::string> labels,
                          std::span<const double> payoff_values, const ImpactModel& model,
                          const SpaceTimeGrid& grid, double x0, std::size_t n_paths,
                          std::size_t n_steps, std::uint64_t seed, double pde_price,
                          std::span<const double> g_values = {});

struct ContactReport {
    double contact_fraction = 0.0;
    double gap_mean = 0.0;
    bool near_optimal = true;
};

ContactReport contact_diagnostic(const McResult& result, double gap_tolerance = 1e-3);

}  // namespace impact
