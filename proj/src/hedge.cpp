#include "impact/hedge.hpp"

#include <algorithm>
#include <cmath>

#include "impact/errors.hpp"
#include "impact/numerics.hpp"
#include "impact/parallel.hpp"
#include "impact/rng.hpp"

namespace impact {

double StrategySpec::y(double t, double x, ClampStats* clamp) const {
    return interp_bilinear(grid, y_surface, t, x, clamp);
}

double StrategySpec::gamma(double t, double x, ClampStats* clamp) const {
    return interp_bilinear(grid, gamma_surface, t, x, clamp);
}

double StrategySpec::b(double t, double x, ClampStats* clamp) const {
    return interp_bilinear(grid, b_surface, t, x, clamp);
}

namespace {

/// b = Dt y + 1/2 sigma(., gamma)^2 Dxx y on the value grid, forward time
/// difference (copied on the last level), gamma clamped to the cap so sigma
/// stays inside its domain.
std::vector<double> build_b_surface(const SpaceTimeGrid& grid,
                                    std::span<const double> y_surface,
                                    std::span<const double> gamma_surface,
                                    const ImpactModel& model) {
    const double dt = grid.dt();
    std::vector<double> b(grid.surface_size());
    for (std::size_t i = 0; i <= grid.n_time; ++i) {
        const std::size_t i_next = std::min(i + 1, grid.n_time);
        const std::size_t i_prev = i_next == i ? i - 1 : i;
        std::span<const double> y_row{y_surface.data() + grid.at(i, 0), grid.n_space};
        const auto dxx_y = second_diff(y_row, grid.dx());
        const double t = grid.t(i);
        for (std::size_t j = 0; j < grid.n_space; ++j) {
            const double x = grid.x(j);
            const double dty = (y_surface[grid.at(i_next, j)] -
                                y_surface[grid.at(i_prev, j)]) / dt;
            double z = gamma_surface[grid.at(i, j)];
            const double cap = model.gamma_cap(t, x);
            if (std::isfinite(cap)) z = std::min(z, cap);
            const double s = model.sigma(t, x, z);
            b[grid.at(i, j)] = dty + 0.5 * s * s * dxx_y[j];
        }
    }
    return b;
}

}  // namespace

StrategySpec exact_hedge(const PdeSolution& solution, const ImpactModel& model,
                         double x0) {
    StrategySpec s;
    s.grid = solution.grid;
    s.y_surface = solution.dx_values;
    s.gamma_surface = solution.dxx_values;
    s.b_surface = build_b_surface(s.grid, s.y_surface, s.gamma_surface, model);
    s.initial_capital = solution.price(x0);
    return s;
}

StrategySpec asymptotic_hedge(const PdeSolution& v0, const PdeSolution& delta_v,
                              const ImpactModel& model, double eps, double x0) {
    if (v0.values.size() != delta_v.values.size())
        throw LengthMismatch("asymptotic_hedge: v0 and delta_v grids differ");
    StrategySpec s;
    s.grid = v0.grid;
    const std::size_t n = v0.values.size();
    s.y_surface.resize(n);
    s.gamma_surface.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        s.y_surface[k] = v0.dx_values[k] + eps * delta_v.dx_values[k];
        s.gamma_surface[k] = v0.dxx_values[k] + eps * delta_v.dxx_values[k];
    }
    const ImpactModel scaled = model.scaled(eps);
    s.b_surface = build_b_surface(s.grid, s.y_surface, s.gamma_surface, scaled);
    s.initial_capital = v0.price(x0) + eps * delta_v.price(x0);
    return s;
}

HedgeReport simulate_impact_dynamics(const StrategySpec& strategy, const ImpactModel& model,
                                     std::span<const double> target_values,
                                     const SpaceTimeGrid& grid, double x0,
                                     std::size_t n_paths, std::size_t n_steps,
                                     std::uint64_t seed) {
    if (target_values.size() != grid.n_space)
        throw LengthMismatch("simulate_impact_dynamics: target_values size != n_space");
    if (n_paths == 0 || n_steps == 0)
        throw DomainViolation("simulate_impact_dynamics: n_paths and n_steps must be > 0");

    HedgeReport rep;
    rep.n_paths = n_paths;
    rep.n_steps = n_steps;
    rep.seed = seed;
    rep.initial_capital = strategy.initial_capital;
    rep.terminal_errors.resize(n_paths);

    const double dt = (grid.t_end - grid.t_start) / static_cast<double>(n_steps);
    const double sqdt = std::sqrt(dt);

    std::vector<char> escaped(n_paths, 0);
    std::vector<ClampStats> clamps(n_paths);

    parallel_for(0, n_paths, [&](std::size_t p) {
        PathRng rng(seed, p);
        double x = x0;
        double y = strategy.y(grid.t_start, x0);
        double v = strategy.initial_capital;
        for (std::size_t k = 0; k < n_steps; ++k) {
            const double t = grid.t_start + static_cast<double>(k) * dt;
            double z = strategy.gamma(t, x, &clamps[p]);
            const double fe = model.f_eff(x);
            const double cap = 1.0 - 0.5 * model.delta_cap_rel;
            if (fe * z >= cap) {
                escaped[p] = 1;
                z = cap / fe;  // freeze at the boundary and stop trading
                break;
            }
            const double s = model.sigma(t, x, z);
            const double big_f = model.big_f(t, x, z);
            const double b = strategy.b(t, x, &clamps[p]);
            const double mu = model.drift(t, x, z, b);
            const double dxp = mu * dt + s * sqdt * rng.normal();
            v += big_f * dt + y * dxp;
            y += b * dt + z * dxp;
            x += dxp;
        }
        const double target = interp_linear(grid, target_values, x, &clamps[p]);
        rep.terminal_errors[p] = v - target;
    });

    for (std::size_t p = 0; p < n_paths; ++p) {
        rep.domain_escapes += static_cast<std::size_t>(escaped[p]);
        rep.clamp.below += clamps[p].below;
        rep.clamp.above += clamps[p].above;
    }
    double sup = 0.0;
    for (double e : rep.terminal_errors) sup = std::max(sup, std::abs(e));
    rep.sup_error = sup;
    rep.mean_error = pairwise_sum(rep.terminal_errors) / static_cast<double>(n_paths);
    if (n_paths > 1) {
        std::vector<double> dev2(n_paths);
        for (std::size_t p = 0; p < n_paths; ++p) {
            const double d = rep.terminal_errors[p] - rep.mean_error;
            dev2[p] = d * d;
        }
        rep.std_error = std::sqrt(pairwise_sum(dev2) / static_cast<double>(n_paths - 1));
    }
    return rep;
}

HedgeReport run_exact_hedge(const ImpactModel& model, const PayoffSpec& payoff,
                            const SpaceTimeGrid& grid, double x0, std::size_t n_paths,
                            std::size_t n_steps, std::uint64_t seed,
                            const SolverOptions& opts) {
    const auto lift = face_lift(payoff, model, grid);
    const auto sol = solve_hjb(model, lift.g_hat_values, grid, opts);
    const auto strategy = exact_hedge(sol, model, x0);
    return simulate_impact_dynamics(strategy, model, lift.g_hat_values, grid, x0,
                                    n_paths, n_steps, seed);
}

HedgeReport run_asymptotic_hedge(const ImpactModel& model, const PayoffSpec& payoff,
                                 const SpaceTimeGrid& grid, double eps, double x0,
                                 std::size_t n_paths, std::size_t n_steps,
                                 std::uint64_t seed) {
    const auto lift = face_lift(payoff, model, grid);
    const auto v0 = solve_linear_v0(model, lift.g_hat_values, grid);
    const auto dv = solve_delta_v(model, v0, grid);
    const auto strategy = asymptotic_hedge(v0, dv, model, eps, x0);
    const ImpactModel scaled = model.scaled(eps);
    return simulate_impact_dynamics(strategy, scaled, lift.g_hat_values, grid, x0,
                                    n_paths, n_steps, seed);
}

}  // namespace impact
