#include "impact/experiments.hpp"

#include <cmath>

#include "impact/dual.hpp"
#include "impact/errors.hpp"
#include "impact/facelift.hpp"
#include "impact/hedge.hpp"
#include "impact/numerics.hpp"
#include "impact/parallel.hpp"
#include "impact/rng.hpp"

namespace impact {

ExpansionReport run_expansion_study(const StudyConfig& cfg) {
    const ImpactModel model = cfg.root.model.build();
    const PayoffSpec payoff = cfg.root.payoff.build();
    ExpansionReport rep;
    rep.table = price_expansion(model, cfg.root.grid, payoff, cfg.eps_list,
                                cfg.root.spot, cfg.root.solver);
    rep.slope_ok = rep.table.fitted_slope >= 1.5;
    rep.ratios_ok = true;
    const auto& rows = rep.table.rows;
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        if (rows[i].eps <= 0.0 || rows[i + 1].eps <= 0.0) continue;
        if (std::abs(rows[i + 1].eps - 0.5 * rows[i].eps) > 1e-12 * rows[i].eps) continue;
        const double num = std::abs(rows[i + 1].gap);
        const double den = std::abs(rows[i].gap);
        if (den > 0.0 && num / den > 0.6) rep.ratios_ok = false;
    }
    return rep;
}

VarianceReport run_variance_identity(const StudyConfig& cfg) {
    if (cfg.root.model.sigma_mode != "constant")
        throw HypothesisViolation("variance identity requires constant sigma0");
    const ImpactModel model = cfg.root.model.build();
    const SpaceTimeGrid& grid = cfg.root.grid;
    const PayoffSpec payoff = cfg.root.payoff.build();

    // constancy of (lambda1, lambda2) over the lattice, not just the config flag
    const double l1 = model.dz_bar_f(grid.t_start, cfg.root.spot, 0.0);
    const double l2 = model.d2z_bar_f0(grid.t_start, cfg.root.spot);
    for (std::size_t i = 0; i <= grid.n_time; i += grid.n_time >= 4 ? grid.n_time / 4 : 1)
        for (std::size_t j = 0; j < grid.n_space; j += grid.n_space >= 8 ? grid.n_space / 8 : 1) {
            const double t = grid.t(i), x = grid.x(j);
            if (std::abs(model.dz_bar_f(t, x, 0.0) - l1) > 1e-12 * (1.0 + std::abs(l1)) ||
                std::abs(model.d2z_bar_f0(t, x) - l2) > 1e-12 * (1.0 + std::abs(l2)))
                throw HypothesisViolation("variance identity requires constant coefficients");
        }

    VarianceReport rep;
    rep.n_paths = cfg.root.mc.n_paths;
    rep.seed = cfg.root.seed;
    rep.coefficient = l1 > 0.0 ? l2 / (4.0 * l1) : 0.0;

    const auto lift = face_lift(payoff, model, grid);
    const auto v0 = solve_linear_v0(model, lift.g_hat_values, grid);
    const auto dv = solve_delta_v(model, v0, grid);
    rep.delta_v_price = dv.price(cfg.root.spot);

    // terminal delta of the lifted payoff under the impact-free dynamics
    // X_T = spot + sigma0 sqrt(T) xi, sampled exactly
    const auto dg = first_diff(lift.g_hat_values, grid.dx());
    const double s0 = model.sigma0(grid.t_start, cfg.root.spot);
    const double sq_t = std::sqrt(grid.t_end - grid.t_start);
    const std::size_t n = rep.n_paths;
    std::vector<double> samples(n);
    parallel_for(0, n, [&](std::size_t p) {
        PathRng rng(rep.seed, p);
        const double x = cfg.root.spot + s0 * sq_t * rng.normal();
        samples[p] = interp_linear(grid, dg, x);
    });
    const double mean = pairwise_sum(samples) / static_cast<double>(n);
    std::vector<double> dev2(n);
    for (std::size_t p = 0; p < n; ++p) {
        const double d = samples[p] - mean;
        dev2[p] = d * d;
    }
    rep.mc_variance = pairwise_sum(dev2) / static_cast<double>(n - 1);
    // stderr of a sample variance: sqrt((m4 - var^2)/n), m4 estimated directly
    std::vector<double> dev4(n);
    for (std::size_t p = 0; p < n; ++p) dev4[p] = dev2[p] * dev2[p];
    const double m4 = pairwise_sum(dev4) / static_cast<double>(n);
    const double var_of_var = (m4 - rep.mc_variance * rep.mc_variance) / static_cast<double>(n);
    rep.mc_variance_stderr = var_of_var > 0.0 ? std::sqrt(var_of_var) : 0.0;

    rep.rhs = rep.coefficient * rep.mc_variance;
    rep.tolerance = 3.0 * rep.coefficient * rep.mc_variance_stderr + 5.0 * grid.dx() * grid.dx();
    rep.pass = std::abs(rep.delta_v_price - rep.rhs) <= rep.tolerance;
    return rep;
}

ConsistencyReport run_consistency_matrix(const StudyConfig& cfg) {
    const ImpactModel model = cfg.root.model.build();
    const SpaceTimeGrid& grid = cfg.root.grid;
    const PayoffSpec payoff = cfg.root.payoff.build();
    ConsistencyReport rep;

    const auto lift = face_lift(payoff, model, grid);
    const auto sol = solve_hjb(model, lift.g_hat_values, grid, cfg.root.solver);
    const double price = sol.price(cfg.root.spot);

    {
        MatrixCell cell;
        cell.name = "dual_vs_pde";
        const auto control = ControlSpec::markov_from_pde(sol);
        const auto mc = dual_value(control, lift.g_hat_values, model, grid, cfg.root.spot,
                                   cfg.root.mc.n_paths, cfg.root.mc.n_steps, cfg.root.seed,
                                   lift.g_values);
        cell.lhs = mc.estimate;
        cell.rhs = price;
        cell.margin = 3.0 * mc.stderr_ + 5.0 * grid.dx() * grid.dx();
        cell.pass = std::abs(cell.lhs - cell.rhs) <= cell.margin;
        rep.cells.push_back(cell);
    }
    {
        MatrixCell cell;
        cell.name = "expansion_vs_full";
        StudyConfig sub = cfg;
        sub.eps_list = {0.4, 0.2, 0.1};
        const auto exp = run_expansion_study(sub);
        cell.lhs = exp.table.fitted_slope;
        cell.rhs = 1.5;
        cell.margin = 0.0;
        cell.pass = exp.slope_ok && exp.ratios_ok;
        rep.cells.push_back(cell);
    }
    {
        MatrixCell cell;
        cell.name = "hedge_capital_vs_price";
        const auto strategy = exact_hedge(sol, model, cfg.root.spot);
        cell.lhs = strategy.initial_capital;
        cell.rhs = price;
        cell.margin = 1e-12 * (1.0 + std::abs(price));
        cell.pass = std::abs(cell.lhs - cell.rhs) <= cell.margin;
        rep.cells.push_back(cell);
    }
    for (const auto& c : rep.cells) rep.all_pass = rep.all_pass && c.pass;
    return rep;
}

}  // namespace impact
