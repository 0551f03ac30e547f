#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "impact/facelift.hpp"
#include "impact/grid.hpp"
#include "impact/model.hpp"
#include "impact/numerics.hpp"
#include "impact/pde.hpp"

namespace impact {

/// Markov hedging strategy (y, b, gamma) read off a value surface:
///   dY = b dt + gamma dX, with Y_0 = y(0, x0).
/// Surfaces live on the PDE grid and are queried bilinearly.
struct StrategySpec {
    SpaceTimeGrid grid;
    std::vector<double> y_surface;      // dx of the value surface
    std::vector<double> gamma_surface;  // dxx of the value surface
    std::vector<double> b_surface;      // Dt y + 1/2 sigma(., gamma)^2 Dxx y
    double initial_capital = 0.0;

    double y(double t, double x, ClampStats* clamp = nullptr) const;
    double gamma(double t, double x, ClampStats* clamp = nullptr) const;
    double b(double t, double x, ClampStats* clamp = nullptr) const;
};

struct HedgeReport {
    std::vector<double> terminal_errors;  // V_T - target(X_T), per path
    double sup_error = 0.0;
    double mean_error = 0.0;
    double std_error = 0.0;
    double initial_capital = 0.0;
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    std::uint64_t seed = 0;
    std::size_t domain_escapes = 0;  // paths where f gamma reached the cap
    ClampStats clamp;
};

/// Strategy from the nonlinear value surface: replicating portfolio under the
/// impacted dynamics. Initial capital = v(0, x0).
StrategySpec exact_hedge(const PdeSolution& solution, const ImpactModel& model,
                         double x0);

/// First-order proxy: surfaces of w = v0 + eps * delta_v, coefficients of the
/// eps-scaled model.
StrategySpec asymptotic_hedge(const PdeSolution& v0, const PdeSolution& delta_v,
                              const ImpactModel& model, double eps, double x0);

/// Joint Euler scheme for (X, Y, V) under the impacted coefficients:
///   dX = mu dt + sigma(t, X, gamma) dW,
///   dY = b dt + gamma dX,
///   dV = F(t, X, gamma) dt + Y dX.
/// Paths where f(X) gamma crosses 1 - delta_cap/2 are frozen and counted as
/// domain escapes. target_values are grid values of the payoff the error is
/// measured against.
HedgeReport simulate_impact_dynamics(const StrategySpec& strategy, const ImpactModel& model,
                                     std::span<const double> target_values,
                                     const SpaceTimeGrid& grid, double x0,
                                     std::size_t n_paths, std::size_t n_steps,
                                     std::uint64_t seed);

/// End-to-end exact replication run: face-lift, nonlinear solve, strategy
/// extraction, simulation against the lifted payoff.
HedgeReport run_exact_hedge(const ImpactModel& model, const PayoffSpec& payoff,
                            const SpaceTimeGrid& grid, double x0, std::size_t n_paths,
                            std::size_t n_steps, std::uint64_t seed,
                            const SolverOptions& opts = {});

/// End-to-end first-order hedge at impact level eps.
HedgeReport run_asymptotic_hedge(const ImpactModel& model, const PayoffSpec& payoff,
                                 const SpaceTimeGrid& grid, double eps, double x0,
                                 std::size_t n_paths, std::size_t n_steps,
                                 std::uint64_t seed);

}  // namespace impact
