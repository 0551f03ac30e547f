#pragma once

#include <span>
#include <string>
#include <vector>

#include "impact/facelift.hpp"
#include "impact/grid.hpp"
#include "impact/model.hpp"

namespace impact {

enum class Scheme { Implicit, Explicit };

struct SolverOptions {
    Scheme scheme = Scheme::Implicit;
    double tol_policy = 1e-10;
    std::size_t max_policy_iterations = 50;
    std::size_t control_grid_size = 257;
};

/// Value surface v(t_i, x_j) with derivative fields, the converged Markov
/// control field and the discrete PDE defect.
struct PdeSolution {
    SpaceTimeGrid grid;
    std::vector<double> values;          // (n_time+1) x n_space
    std::vector<double> dx_values;
    std::vector<double> dxx_values;
    std::vector<double> control_field;   // optimal vol s_hat
    std::vector<double> residual_field;
    std::size_t total_policy_iterations = 0;
    std::size_t max_policy_iterations_step = 0;
    double tol_policy = 0.0;
    double residual_sup = 0.0;
    double gamma_margin = kInf;          // min over nodes of (gamma_cap - dxx)

    double value_at(double t, double x) const;
    double price(double spot) const { return value_at(grid.t_start, spot); }
    std::span<const double> slice(std::size_t i) const {
        return {values.data() + grid.at(i, 0), grid.n_space};
    }
};

/// Backward fully implicit solve of
///   min{ -dt v - bar F(., dxx v), bar_gamma - dxx v } = 0,  v(T,.) = terminal
/// via Howard policy iteration on the Fenchel control form. The terminal
/// slice should already satisfy the discrete gamma constraint (run face_lift
/// first).
PdeSolution solve_hjb(const ImpactModel& model, std::span<const double> terminal,
                      const SpaceTimeGrid& grid, const SolverOptions& opts = {});

/// Linear backward solve with diffusion dz bar F(., 0) = sigma0^2 / 2.
PdeSolution solve_linear_v0(const ImpactModel& model, std::span<const double> terminal,
                            const SpaceTimeGrid& grid);

/// Linear backward solve of the first-order correction: same diffusion, zero
/// terminal condition and source 1/2 d2z bar F0 (dxx v0)^2.
PdeSolution solve_delta_v(const ImpactModel& model, const PdeSolution& v0,
                          const SpaceTimeGrid& grid);

struct ExpansionRow {
    double eps;
    double full_price;
    double expansion_price;
    double gap;
};

struct ExpansionTable {
    double v0_price;
    double delta_v_price;
    std::vector<ExpansionRow> rows;
    double fitted_slope;  // log gap vs log eps, least squares
};

/// Small-impact expansion study: full price under f -> eps f versus
/// v0 + eps delta_v, terminal face-lift held fixed across the family.
ExpansionTable price_expansion(const ImpactModel& model, const SpaceTimeGrid& grid,
                               const PayoffSpec& payoff, std::span<const double> eps_list,
                               double spot, const SolverOptions& opts = {});

/// Discrete defect min{ -Dt v - bar F(., Dxx v), bar_gamma - Dxx v } with a
/// one-sided time difference, interior space nodes only.
std::vector<double> residual(const PdeSolution& solution, const ImpactModel& model);

}  // namespace impact
